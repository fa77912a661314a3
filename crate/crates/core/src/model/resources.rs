use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Compute resources: virtual CPU cores, RAM in GB and accelerator units.
///
/// Used for user demand, provisioned node resources and hard node capacity
/// alike, and (with currency units) for per-unit prices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceVector<T> {
    pub vcpu: T,
    pub ram: T,
    #[serde(default)]
    pub gpu: T,
}

impl<T: Real> ResourceVector<T> {
    pub fn new(vcpu: T, ram: T) -> Self {
        Self {
            vcpu,
            ram,
            gpu: T::zero(),
        }
    }

    pub fn with_gpu(mut self, gpu: T) -> Self {
        self.gpu = gpu;
        self
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn components(&self) -> [T; 3] {
        [self.vcpu, self.ram, self.gpu]
    }

    fn zip_with(self, other: Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            vcpu: f(self.vcpu, other.vcpu),
            ram: f(self.ram, other.ram),
            gpu: f(self.gpu, other.gpu),
        }
    }

    /// Component-wise `self <= other`.
    pub fn fits_within(&self, other: &Self) -> bool {
        self.vcpu <= other.vcpu && self.ram <= other.ram && self.gpu <= other.gpu
    }

    /// True when any component of `self` is strictly larger than in `other`.
    pub fn exceeds_any(&self, other: &Self) -> bool {
        !self.fits_within(other)
    }

    pub fn component_max(self, other: Self) -> Self {
        self.zip_with(other, T::max)
    }

    pub fn component_min(self, other: Self) -> Self {
        self.zip_with(other, T::min)
    }

    pub fn dot(&self, other: &Self) -> T {
        self.vcpu * other.vcpu + self.ram * other.ram + self.gpu * other.gpu
    }

    pub fn scaled(self, k: T) -> Self {
        Self {
            vcpu: self.vcpu * k,
            ram: self.ram * k,
            gpu: self.gpu * k,
        }
    }

    pub fn is_non_negative(&self) -> bool {
        self.components().iter().all(|c| *c >= T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }

    /// Smallest relative headroom `(cap - self) / cap` over components.
    /// Components with zero capacity count only when they carry demand.
    pub fn headroom_ratio(&self, cap: &Self) -> T {
        let mut margin = T::infinity();
        for (d, c) in self.components().into_iter().zip(cap.components()) {
            let m = if c > T::zero() {
                (c - d) / c
            } else if d > T::zero() {
                T::neg_infinity()
            } else {
                continue;
            };
            margin = margin.min(m);
        }
        margin
    }
}

impl<T: Real> Add for ResourceVector<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<T: Real> AddAssign for ResourceVector<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real> Mul<T> for ResourceVector<T> {
    type Output = Self;

    fn mul(self, k: T) -> Self {
        self.scaled(k)
    }
}

impl<T: Real> Sum for ResourceVector<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), Add::add)
    }
}

impl<'a, T: Real> Sum<&'a ResourceVector<T>> for ResourceVector<T> {
    fn sum<I: Iterator<Item = &'a Self>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

impl<T: Real> fmt::Display for ResourceVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} vCPU / {} GB", self.vcpu, self.ram)?;
        if self.gpu != T::zero() {
            write!(f, " / {} GPU", self.gpu)?;
        }
        Ok(())
    }
}
