//! CSV output of error records. Kept free of timestamps so that identical
//! runs produce identical bytes.

use std::io::{self, Write};

use super::evolve::StepAverage;
use super::ntu::ErrorRecord;

pub const CSV_HEADER: &str = "step,beta,bond,method,delta_initial,delta_final,cg_iters,fallback";

pub fn write_records<W: Write>(records: &[ErrorRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{:.6},{},{},{:.12e},{:.12e},{},{}",
            r.step,
            r.beta,
            r.bond,
            r.method,
            r.delta_initial,
            r.delta_final,
            r.cg_iters,
            r.fallback
        )?;
    }
    Ok(())
}

pub fn records_to_string(records: &[ErrorRecord]) -> String {
    let mut buf = Vec::new();
    write_records(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub const COMPARE_HEADER: &str =
    "step,beta,zmt_initial,zmt_final,svd_initial,svd_final,ratio_svd_over_zmt";

/// Per-step averages of a paired run side by side, with `svd_final / zmt_final`.
pub fn write_comparison<W: Write>(
    zmt: &[StepAverage],
    svd: &[StepAverage],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "{COMPARE_HEADER}")?;
    for (z, s) in zmt.iter().zip(svd) {
        let ratio = if z.delta_final > 0.0 {
            s.delta_final / z.delta_final
        } else {
            f64::NAN
        };
        writeln!(
            out,
            "{},{:.6},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e}",
            z.step, z.beta, z.delta_initial, z.delta_final, s.delta_initial, s.delta_final, ratio
        )?;
    }
    Ok(())
}

/// Fraction of steps with `zmt_final <= svd_final`, and the mean over steps of
/// `svd_final / zmt_final` (steps where both vanish are skipped in the mean).
pub fn comparison_stats(zmt: &[StepAverage], svd: &[StepAverage]) -> (f64, f64) {
    let n = zmt.len().min(svd.len());
    if n == 0 {
        return (1.0, f64::NAN);
    }
    let wins = zmt
        .iter()
        .zip(svd)
        .filter(|(z, s)| z.delta_final <= s.delta_final)
        .count();
    let ratios: Vec<f64> = zmt
        .iter()
        .zip(svd)
        .filter(|(z, _)| z.delta_final > 0.0)
        .map(|(z, s)| s.delta_final / z.delta_final)
        .collect();
    let mean = if ratios.is_empty() {
        f64::NAN
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    (wins as f64 / n as f64, mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::z2::ntu::Method;

    #[test]
    fn header_and_row_format() {
        let r = ErrorRecord {
            step: 3,
            beta: 0.03,
            bond: "abcd/a'b'".into(),
            method: Method::Zmt,
            delta_initial: 1e-3,
            delta_final: 5e-4,
            cg_iters: 12,
            fallback: false,
            d_before: 8,
            d_after: 4,
            metric_floor: Some(1e-9),
            singular_environment: false,
        };
        let s = records_to_string(&[r]);
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "3,0.030000,abcd/a'b',zmt,1.000000000000e-3,5.000000000000e-4,12,false"
        );
    }

    #[test]
    fn stats() {
        let avg = |d| StepAverage {
            step: 1,
            beta: 0.0,
            delta_initial: d,
            delta_final: d,
        };
        let (frac, ratio) = comparison_stats(&[avg(1.0), avg(1.0)], &[avg(2.0), avg(0.5)]);
        assert_eq!(frac, 0.5);
        assert_eq!(ratio, 1.25);
    }
}
