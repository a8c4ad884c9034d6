//! Fixed-capacity coordinate vector.
//!
//! Every coordinate tuple in this crate (group coordinates, base points,
//! algebra components, feature vectors) has at most nine entries, so a
//! small inline buffer avoids heap traffic in the integrator loops.

use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

/// Maximum number of coordinates (the 3x3 row-major rotation matrix).
pub const MAX_COORDS: usize = 9;

/// Inline, copyable coordinate vector with up to [`MAX_COORDS`] entries.
#[derive(Clone, Copy)]
pub struct Coords {
    len: usize,
    buf: [f64; MAX_COORDS],
}

impl Coords {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_COORDS, "coordinate vector capacity exceeded");
        Coords {
            len,
            buf: [0.0; MAX_COORDS],
        }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut c = Coords::zeros(values.len());
        c.buf[..values.len()].copy_from_slice(values);
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.buf[..self.len]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.buf[..self.len]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }

    pub fn push(&mut self, value: f64) {
        assert!(self.len < MAX_COORDS, "coordinate vector capacity exceeded");
        self.buf[self.len] = value;
        self.len += 1;
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Coords) -> f64 {
        debug_assert_eq!(self.len, other.len);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Coords {
        let mut out = *self;
        for x in out.as_mut_slice() {
            *x *= factor;
        }
        out
    }

    pub fn add(&self, other: &Coords) -> Coords {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for (x, y) in out.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &Coords) -> Coords {
        self.add(&other.scaled(-1.0))
    }

    /// `self + factor * other`, the RK4 stage update.
    pub fn axpy(&self, factor: f64, other: &Coords) -> Coords {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for (x, y) in out.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *x += factor * y;
        }
        out
    }

    /// Largest absolute difference between entries.
    pub fn max_abs_diff(&self, other: &Coords) -> f64 {
        debug_assert_eq!(self.len, other.len);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Deref for Coords {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        self.as_slice()
    }
}

impl DerefMut for Coords {
    fn deref_mut(&mut self) -> &mut [f64] {
        self.as_mut_slice()
    }
}

impl Index<usize> for Coords {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Coords {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl PartialEq for Coords {
    fn eq(&self, other: &Self) -> bool {
        self.as_slice() == other.as_slice()
    }
}

impl fmt::Debug for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl From<&[f64]> for Coords {
    fn from(values: &[f64]) -> Self {
        Coords::from_slice(values)
    }
}

impl<const N: usize> From<[f64; N]> for Coords {
    fn from(values: [f64; N]) -> Self {
        Coords::from_slice(&values)
    }
}

impl FromIterator<f64> for Coords {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut c = Coords::zeros(0);
        for x in iter {
            c.push(x);
        }
        c
    }
}

impl Serialize for Coords {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len))?;
        for x in self.as_slice() {
            seq.serialize_element(x)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Coords {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CoordsVisitor;
        impl<'de> Visitor<'de> for CoordsVisitor {
            type Value = Coords;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a sequence of at most {MAX_COORDS} numbers")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Coords, A::Error> {
                let mut c = Coords::zeros(0);
                while let Some(x) = seq.next_element::<f64>()? {
                    if c.len() == MAX_COORDS {
                        return Err(serde::de::Error::invalid_length(
                            MAX_COORDS + 1,
                            &self,
                        ));
                    }
                    c.push(x);
                }
                Ok(c)
            }
        }
        deserializer.deserialize_seq(CoordsVisitor)
    }
}
