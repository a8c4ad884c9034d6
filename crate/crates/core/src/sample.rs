//! Seeded random sampling of group elements, base points and features.
//!
//! Translations are drawn uniformly from [-2, 2] per coordinate, angles
//! uniformly from [0, 2*pi), rotations through normalized Gaussian
//! quaternions, and feature vectors uniformly on the unit sphere of V.

use crate::bundle::{BasePoint, BaseSpace, Quotient};
use crate::coords::Coords;
use crate::groups::{AlgebraElement, GroupElement, GroupSpec, Mat3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One standard normal draw via Box-Muller.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Haar-uniform rotation matrix from a normalized Gaussian quaternion.
pub fn sample_rotation_matrix<R: Rng>(rng: &mut R) -> Mat3 {
    let q = [
        standard_normal(rng),
        standard_normal(rng),
        standard_normal(rng),
        standard_normal(rng),
    ];
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

pub fn sample_group<R: Rng>(spec: GroupSpec, rng: &mut R) -> GroupElement {
    match spec {
        GroupSpec::TranslationRn(n) => {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            GroupElement::translation(&v)
        }
        GroupSpec::SO2 | GroupSpec::U1 => GroupElement::circle(spec, rng.random_range(0.0..TAU)),
        GroupSpec::SO3 => GroupElement::rotation(&sample_rotation_matrix(rng)),
        GroupSpec::ProductR2xU1 => GroupElement::product_r2xu1(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.0..TAU),
        ),
    }
}

/// A random stabiliser element, in stabiliser coordinates.
pub fn sample_subgroup<R: Rng>(quotient: &Quotient, rng: &mut R) -> GroupElement {
    let h_spec = quotient.h_spec();
    match h_spec {
        GroupSpec::U1 | GroupSpec::SO2 => GroupElement::circle(h_spec, rng.random_range(0.0..TAU)),
        GroupSpec::TranslationRn(0) => GroupElement::identity(h_spec),
        GroupSpec::TranslationRn(n) => {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            GroupElement::translation(&v)
        }
        _ => unreachable!("stabilisers in scope are abelian"),
    }
}

pub fn sample_algebra<R: Rng>(spec: GroupSpec, rng: &mut R) -> AlgebraElement {
    let comps: Coords = (0..spec.dim_g())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    AlgebraElement { spec, comps }
}

pub fn sample_base_point<R: Rng>(space: BaseSpace, rng: &mut R) -> BasePoint {
    match space {
        BaseSpace::R1 => BasePoint::on_line(rng.random_range(-2.0..2.0)),
        BaseSpace::R2 => BasePoint::on_plane(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ),
        BaseSpace::Circle => BasePoint::on_circle(rng.random_range(0.0..TAU)),
        BaseSpace::S2 => {
            let v = [
                standard_normal(rng),
                standard_normal(rng),
                standard_normal(rng),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            BasePoint::on_sphere([v[0] / n, v[1] / n, v[2] / n]).expect("normalized")
        }
    }
}

/// Uniform draw from the unit sphere of the feature space.
pub fn sample_unit_feature<R: Rng>(dim: usize, rng: &mut R) -> Coords {
    loop {
        let v: Coords = (0..dim).map(|_| standard_normal(rng)).collect();
        let n = v.norm();
        if n > 1e-6 {
            return v.scaled(1.0 / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_are_orthogonal() {
        let mut rng = seeded_rng(7);
        for _ in 0..50 {
            let m = sample_rotation_matrix(&mut rng);
            assert!((m.transpose() * m - Mat3::identity()).norm() < 1e-12);
            assert!((m.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seeding_is_deterministic() {
        let a = sample_group(GroupSpec::ProductR2xU1, &mut seeded_rng(42));
        let b = sample_group(GroupSpec::ProductR2xU1, &mut seeded_rng(42));
        assert_eq!(a.coords, b.coords);
    }

    #[test]
    fn features_are_unit_norm() {
        let mut rng = seeded_rng(3);
        for dim in 1..=3 {
            let v = sample_unit_feature(dim, &mut rng);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }
}
