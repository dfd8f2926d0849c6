//! Plain-text artifacts. Every number is written with `{:.16e}` (17
//! significant digits) so files round-trip and diff byte-for-byte.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::gaussclosed::Trajectory;
use crate::meanfit::MeanTable;
use crate::timewarp::TimeWarp;
use crate::Real;

fn row<T: Real, W: Write>(w: &mut W, cells: &[T]) -> Result<()> {
    let line: Vec<String> = cells.iter().map(|c| format!("{c:.16e}")).collect();
    writeln!(w, "{}", line.join(","))?;
    Ok(())
}

/// Header `t,ubar,A,B,D,E,V`.
pub fn write_mean_table<T: Real, W: Write>(w: &mut W, table: &MeanTable<T>) -> Result<()> {
    writeln!(w, "t,ubar,A,B,D,E,V")?;
    for k in 0..table.len() {
        let r = table.node(k);
        row(w, &[r.t, r.ubar, r.a, r.b, r.d, r.e, r.v])?;
    }
    Ok(())
}

/// Long format, header `t,x,u,log_u`.
pub fn write_field<T: Real, W: Write>(w: &mut W, field: &SolutionField<T>) -> Result<()> {
    writeln!(w, "t,x,u,log_u")?;
    for (j, &t) in field.times().iter().enumerate() {
        for ((&x, &u), &l) in field
            .xs()
            .iter()
            .zip(field.values(j))
            .zip(field.log_values(j))
        {
            row(w, &[t, x, u, l])?;
        }
    }
    Ok(())
}

/// Header `t,mass,mean,variance,argmax`.
pub fn write_moments<T: Real, W: Write>(w: &mut W, field: &SolutionField<T>) -> Result<()> {
    writeln!(w, "t,mass,mean,variance,argmax")?;
    for (j, (&t, m)) in field.times().iter().zip(field.moments()).enumerate() {
        row(w, &[t, m.mass, m.mean, m.variance, field.argmax(j)])?;
    }
    Ok(())
}

/// Header `t,phi`.
pub fn write_warp<T: Real, W: Write>(w: &mut W, warp: &TimeWarp<T>) -> Result<()> {
    writeln!(w, "t,phi")?;
    for (&t, &p) in warp.times().iter().zip(warp.phi_values()) {
        row(w, &[t, p])?;
    }
    Ok(())
}

/// Header `t,a,m,V`.
pub fn write_trajectory<T: Real, W: Write>(w: &mut W, traj: &Trajectory<T>) -> Result<()> {
    writeln!(w, "t,a,m,V")?;
    for (&t, s) in traj.t.iter().zip(&traj.states) {
        row(w, &[t, s.a, s.m, s.variance()])?;
    }
    Ok(())
}

/// Header `t,xbar`.
pub fn write_xbar_trace<T: Real, W: Write>(w: &mut W, trace: &[(T, T)]) -> Result<()> {
    writeln!(w, "t,xbar")?;
    for &(t, x) in trace {
        row(w, &[t, x])?;
    }
    Ok(())
}

/// Reads two numeric columns (comma or whitespace separated). A first line
/// that does not parse is taken as a header; blank lines and `#` comments
/// are skipped.
pub fn read_tabulated<T: Real, R: BufRead>(r: R) -> Result<(Vec<T>, Vec<T>)> {
    let mut xs = Vec::new();
    let mut fs = Vec::new();
    let mut seen_data = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let cols: Vec<&str> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse::<f64>().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                xs.push(T::lit(v[0]));
                fs.push(T::lit(v[1]));
                seen_data = true;
            }
            None if !seen_data && xs.is_empty() && i == 0 => continue,
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected two numbers, got `{body}`"),
                })
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no data rows".into(),
        });
    }
    Ok((xs, fs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_with_and_without_header() {
        let (xs, fs) =
            read_tabulated::<f64, _>("x,f\n0,1\n1, 2.5\n\n# note\n2 3\n".as_bytes()).unwrap();
        assert_eq!(xs, vec![0.0, 1.0, 2.0]);
        assert_eq!(fs, vec![1.0, 2.5, 3.0]);
        let (xs, _) = read_tabulated::<f64, _>("0 1\n1 2\n".as_bytes()).unwrap();
        assert_eq!(xs.len(), 2);
    }

    #[test]
    fn rejects_bad_rows() {
        match read_tabulated::<f64, _>("x,f\n0,1\n1,oops\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_tabulated::<f64, _>("x,f\n".as_bytes()).is_err());
        assert!(read_tabulated::<f64, _>("1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn fixed_width_numbers() {
        let mut out = Vec::new();
        write_xbar_trace(&mut out, &[(0.1f64, 1.0 / 3.0)]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "t,xbar\n1.0000000000000001e-1,3.3333333333333331e-1\n"
        );
    }
}
