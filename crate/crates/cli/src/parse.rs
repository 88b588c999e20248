//! Parsers for command-line values.

use multatlas_core::atlas::Bounds;
use multatlas_core::ComplexParam;

/// Accepts `re,im` and `re+imi` forms (`i` or `j`), as well as a bare real
/// or imaginary number.
pub fn complex(s: &str) -> Result<ComplexParam, String> {
    let s: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number {s:?}; use re,im or re+imi");
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let (re, im) = if let Some((a, b)) = s.split_once(',') {
        (num(a)?, num(b)?)
    } else if let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) {
        // split at the last sign that is not leading and not part of an exponent
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let imag = |t: &str| match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            t => num(t),
        };
        match split {
            Some(k) => (num(&body[..k])?, imag(&body[k..])?),
            None => (0.0, imag(body)?),
        }
    } else {
        (num(&s)?, 0.0)
    };
    ComplexParam::new(re, im).map_err(|e| e.to_string())
}

/// `re_min,re_max,im_min,im_max`.
pub fn bounds(s: &str) -> Result<Bounds, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("cannot parse bounds {s:?}; use re_min,re_max,im_min,im_max"))?;
    match parts[..] {
        [a, b, c, d] => Bounds::new(a, b, c, d).map_err(|e| e.to_string()),
        _ => Err(format!("bounds need four numbers, got {}", parts.len())),
    }
}

/// `WIDTHxHEIGHT`.
pub fn resolution(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("cannot parse resolution {s:?}; use WIDTHxHEIGHT");
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

/// A single period `n` or an inclusive range `a..b` / `a-b`.
pub fn period_range(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("cannot parse period {s:?}; use N, A..B or A-B");
    let s = s.trim();
    let (a, b) = match s.split_once("..").or_else(|| s.split_once('-')) {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let n: usize = s.parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts(s: &str) -> (f64, f64) {
        let c = complex(s).unwrap();
        (c.re, c.im)
    }

    #[test]
    fn complex_forms() {
        assert_eq!(parts("-2,0"), (-2.0, 0.0));
        assert_eq!(parts("-0.75+0.02i"), (-0.75, 0.02));
        assert_eq!(parts("0.3-0.4i"), (0.3, -0.4));
        assert_eq!(parts("1e-3-2E-4i"), (1e-3, -2e-4));
        assert_eq!(parts("-i"), (0.0, -1.0));
        assert_eq!(parts("2.5i"), (0.0, 2.5));
        assert_eq!(parts("-1.5"), (-1.5, 0.0));
        assert_eq!(parts(" 1 , 2 "), (1.0, 2.0));
        for bad in ["", "1,2,3", "abc", "1+2", "nan,0", "1+xi"] {
            assert!(complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn other_values() {
        let b = bounds("-2.5,1.5,-2,2").unwrap();
        assert_eq!((b.re_min, b.im_max), (-2.5, 2.0));
        assert!(bounds("1,0,0,1").is_err());
        assert!(bounds("0,1,0").is_err());
        assert_eq!(resolution("400x300").unwrap(), (400, 300));
        assert!(resolution("0x3").is_err());
        assert_eq!(period_range("3").unwrap(), (3, 3));
        assert_eq!(period_range("2..5").unwrap(), (2, 5));
        assert_eq!(period_range("1-4").unwrap(), (1, 4));
        assert!(period_range("4..2").is_err());
        assert!(period_range("0").is_err());
    }
}
