//! Plot-ready file formats: CSV tables and JSON sidecars.
//!
//! All CSV output uses '.' decimals, LF line endings, and 17 significant
//! digits for reals, so files are byte-stable across runs and round-trip
//! exactly to the f64 values that produced them.

use std::io::Write;

use crate::analysis::{ModulusRow, SpectrumEstimate, ZygmundRow};
use crate::cascade::{IncrementPath, SamplePool};
use crate::error::Result;
use crate::gaussian::GaussianPath;
use crate::moments::MomentTrajectory;
use crate::words::level;

/// 17 significant digits: round-trip exact for f64.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv(mut w: impl Write, traj: &MomentTrajectory) -> Result<()> {
    writeln!(w, "n,u,v,sigma2,scaled_sigma")?;
    let bf = traj.b as f64;
    for n in 0..traj.len() {
        let sigma2 = traj.u[n] - 1.0;
        let scaled = (bf - 1.0).powf(n as f64 / 2.0) * sigma2.max(0.0).sqrt();
        writeln!(
            w,
            "{n},{},{},{},{}",
            fmt_real(traj.u[n]),
            fmt_real(traj.v[n]),
            fmt_real(sigma2),
            fmt_real(scaled)
        )?;
    }
    Ok(())
}

/// `word,increment` rows in lexicographic word order. The empty word
/// serializes as an empty string, so a depth-0 path has one row `,value`.
pub fn write_increments_csv(mut w: impl Write, b: u32, depth: u32, values: &[f64]) -> Result<()> {
    let words = level(b, depth)?;
    debug_assert_eq!(words.len(), values.len());
    writeln!(w, "word,increment")?;
    for (word, &x) in words.iter().zip(values.iter()) {
        writeln!(w, "{word},{}", fmt_real(x))?;
    }
    Ok(())
}

pub fn write_cascade_path_csv(w: impl Write, path: &IncrementPath) -> Result<()> {
    write_increments_csv(w, path.b, path.depth, &path.increments)
}

pub fn write_gaussian_path_csv(w: impl Write, path: &GaussianPath) -> Result<()> {
    write_increments_csv(w, path.b, path.depth, &path.increments)
}

/// Single-column pool CSV; metadata travels in a JSON sidecar.
pub fn write_pool_csv(mut w: impl Write, pool: &SamplePool) -> Result<()> {
    writeln!(w, "value")?;
    for &x in pool.values() {
        writeln!(w, "{}", fmt_real(x))?;
    }
    Ok(())
}

pub fn write_pool_sidecar(w: impl Write, pool: &SamplePool) -> Result<()> {
    serde_json::to_writer_pretty(w, pool.meta()).map_err(std::io::Error::other)?;
    Ok(())
}

/// Grid function `t, X(t)` on the depth-`depth` b-adic grid.
pub fn write_grid_csv(mut w: impl Write, b: u32, depth: u32, grid: &[f64]) -> Result<()> {
    writeln!(w, "t,X")?;
    let den = (b as f64).powi(depth as i32);
    for (k, &x) in grid.iter().enumerate() {
        writeln!(w, "{},{}", fmt_real(k as f64 / den), fmt_real(x))?;
    }
    Ok(())
}

/// Covariance matrices as JSON: row-major entries labeled by words.
pub fn write_cov_json(
    w: impl Write,
    b: u32,
    depth: u32,
    cov: &[f64],
    se: &[f64],
    exact: Option<&[f64]>,
) -> Result<()> {
    let words: Vec<String> = level(b, depth)?.iter().map(|x| x.to_string()).collect();
    let dim = words.len();
    let rows = |flat: &[f64]| -> Vec<Vec<f64>> {
        (0..dim).map(|i| flat[i * dim..(i + 1) * dim].to_vec()).collect()
    };
    let mut doc = serde_json::json!({
        "b": b,
        "j": depth,
        "words": words,
        "cov": rows(cov),
        "se": rows(se),
    });
    if let Some(e) = exact {
        doc["exact"] = serde_json::json!(rows(e));
    }
    serde_json::to_writer_pretty(w, &doc).map_err(std::io::Error::other)?;
    Ok(())
}

/// `alpha,count,dim_est,dim_theory,legendre_upper`; empty bins leave
/// `dim_est` blank rather than printing a sentinel.
pub fn write_spectrum_csv(
    mut w: impl Write,
    est: &SpectrumEstimate,
    legendre: Option<&[f64]>,
) -> Result<()> {
    writeln!(w, "alpha,count,dim_est,dim_theory,legendre_upper")?;
    for i in 0..est.centers.len() {
        let dim = est.dim_est[i].map(fmt_real).unwrap_or_default();
        let leg = legendre
            .map(|l| fmt_real(l[i]))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_real(est.centers[i]),
            est.counts[i],
            dim,
            fmt_real(est.dim_theory[i]),
            leg
        )?;
    }
    Ok(())
}

pub fn write_beta_csv(mut w: impl Write, b: u32, qs: &[f64], beta: &[f64]) -> Result<()> {
    writeln!(w, "q,beta_hat,lower_curve")?;
    let ln_b = (b as f64).ln();
    for (&q, &bh) in qs.iter().zip(beta.iter()) {
        writeln!(
            w,
            "{},{},{}",
            fmt_real(q),
            fmt_real(bh),
            fmt_real(-1.0 - q * q / (2.0 * ln_b))
        )?;
    }
    Ok(())
}

pub fn write_ks_csv(mut w: impl Write, rows: &[(u32, usize, f64)]) -> Result<()> {
    writeln!(w, "n,samples,ks,critical_1pct")?;
    for &(n, count, ks) in rows {
        writeln!(
            w,
            "{n},{count},{},{}",
            fmt_real(ks),
            fmt_real(1.63 / (count as f64).sqrt())
        )?;
    }
    Ok(())
}

pub fn write_zygmund_csv(mut w: impl Write, rows: &[ZygmundRow]) -> Result<()> {
    writeln!(w, "n,h,stat,lil_scaled")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.n,
            fmt_real(r.h),
            fmt_real(r.stat),
            r.lil_scaled.map(fmt_real).unwrap_or_default()
        )?;
    }
    Ok(())
}

pub fn write_modulus_csv(mut w: impl Write, rows: &[ModulusRow]) -> Result<()> {
    writeln!(w, "m,delta,omega,bound,holds")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.m,
            fmt_real(r.delta),
            fmt_real(r.omega),
            fmt_real(r.bound),
            r.holds
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for &x in &[
            0.0,
            1.0,
            -1.0 / 3.0,
            0.1,
            f64::MIN_POSITIVE,
            1.234_567_890_123_456_7e300,
            -9.87e-200,
        ] {
            let s = fmt_real(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s} -> {back}");
        }
    }

    #[test]
    fn csv_shapes() {
        let traj = crate::moments::iterate_moments(3, 1.49, 2.47, 3).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,u,v,sigma2,scaled_sigma\n"));
        assert_eq!(text.lines().count(), 5);
        assert!(!text.contains('\r'));

        let mut buf = Vec::new();
        write_increments_csv(&mut buf, 2, 0, &[1.0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\n,1.0000000000000000e0\n"));
    }

    #[test]
    fn spectrum_csv_leaves_empty_bins_blank() {
        let est = crate::analysis::SpectrumEstimate {
            b: 2,
            depth: 4,
            centers: vec![0.0, 1.0],
            half_width: 0.1,
            counts: vec![16, 0],
            dim_est: vec![Some(1.0), None],
            dim_theory: vec![1.0, 0.27],
        };
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &est, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[2].contains(",0,,"), "line: {}", lines[2]);
    }
}
