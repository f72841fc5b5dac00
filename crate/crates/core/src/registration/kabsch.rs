use crate::error::{Error, Result};
use crate::geometry::{Mat3, RigidTransform, Vec3};

/// Least-squares rigid transform taking `src[i]` onto `dst[i]` (no scale).
///
/// SVD of the cross-covariance with a determinant correction, so the result
/// is always a proper rotation.
pub fn kabsch(src: &[Vec3], dst: &[Vec3]) -> Result<RigidTransform> {
    if src.len() != dst.len() {
        return Err(Error::param(
            "dst",
            format!("{} source points but {} targets", src.len(), dst.len()),
        ));
    }
    if src.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            found: src.len(),
        });
    }
    let n = src.len() as f64;
    let cs = src.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let cd = dst.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mut h = Mat3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || sv[1] <= sv[0] * 1e-12 {
        return Err(Error::Degenerate(
            "cross-covariance has rank < 2 (coincident or collinear points)".into(),
        ));
    }
    let u = svd.u.expect("svd u");
    let v = svd.v_t.expect("svd v_t").transpose();
    let mut d = Mat3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = v * d * u.transpose();
    Ok(RigidTransform::new(r, cd - r * cs))
}

/// Sum of squared residuals of `t` over paired points.
pub fn residual(t: &RigidTransform, src: &[Vec3], dst: &[Vec3]) -> f64 {
    src.iter()
        .zip(dst)
        .map(|(s, d)| (t.apply(s) - d).norm_squared())
        .sum()
}
