//! Dataset CSV: `# key=value` geometry lines, the header
//! `net_gain,pos1,pos2,sigma1,sigma2`, then one row per measurement.
//! Positions and uncertainties are in wavelengths.

use hitchsim_core::fit::{Geometry, HitchDataset, HitchRow};

use crate::error::CliError;
use crate::output::num;

pub const HEADER: &str = "net_gain,pos1,pos2,sigma1,sigma2";
const KEYS: [&str; 4] = ["angle_rad", "length_lambda", "k_rad_per_lambda", "seed_sigma_lambda"];

pub fn to_csv(data: &HitchDataset) -> String {
    let g = &data.geometry;
    let mut out = String::new();
    for (key, value) in KEYS.iter().zip([g.angle, g.length, g.k, g.seed_sigma]) {
        out.push_str(&format!("# {key}={}\n", num(value)));
    }
    out.push_str(HEADER);
    out.push('\n');
    for r in &data.rows {
        let fields = [r.net_gain, r.pos1, r.pos2, r.sigma1, r.sigma2].map(num);
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parses a dataset; `path` only labels errors. Blank lines are skipped and
/// comment lines without `=` are ignored.
pub fn parse(path: &str, text: &str) -> Result<HitchDataset, CliError> {
    let err = |line: usize, message: String| CliError::Input {
        path: path.to_string(),
        line,
        message,
    };
    let mut meta: [Option<f64>; 4] = [None; 4];
    let mut header_seen = false;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if header_seen {
                return Err(err(line_no, "metadata after the header".into()));
            }
            let Some((key, value)) = comment.split_once('=') else {
                continue;
            };
            let key = key.trim();
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| err(line_no, format!("unknown metadata key `{key}`")))?;
            if meta[slot].is_some() {
                return Err(err(line_no, format!("duplicate metadata key `{key}`")));
            }
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("`{key}` is not a number: `{}`", value.trim())))?;
            meta[slot] = Some(v);
            continue;
        }
        if !header_seen {
            if line != HEADER {
                return Err(err(line_no, format!("expected header `{HEADER}`, found `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(err(line_no, format!("expected 5 fields, found {}", fields.len())));
        }
        let mut v = [0.0; 5];
        for (j, f) in fields.iter().enumerate() {
            v[j] = f
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("field {} is not a number: `{f}`", j + 1)))?;
        }
        let row = HitchRow {
            net_gain: v[0],
            pos1: v[1],
            pos2: v[2],
            sigma1: v[3],
            sigma2: v[4],
        };
        if !v.iter().all(|x| x.is_finite()) || row.net_gain <= 0.0 || row.sigma1 <= 0.0 || row.sigma2 <= 0.0 {
            return Err(err(
                line_no,
                "values must be finite with net_gain, sigma1, sigma2 > 0".into(),
            ));
        }
        rows.push(row);
    }
    if !header_seen {
        return Err(err(text.lines().count().max(1), format!("missing header `{HEADER}`")));
    }
    let mut values = [0.0; 4];
    for (j, key) in KEYS.iter().enumerate() {
        values[j] = meta[j].ok_or_else(|| err(1, format!("missing metadata key `{key}`")))?;
    }
    Ok(HitchDataset {
        geometry: Geometry {
            angle: values[0],
            length: values[1],
            k: values[2],
            seed_sigma: values[3],
        },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "# angle_rad=0.005\n# length_lambda=25157.232704402515\n# k_rad_per_lambda=6.283185307179586\n# seed_sigma_lambda=100.0\nnet_gain,pos1,pos2,sigma1,sigma2\n1.5,100.25,3.0,0.5,0.5\n2.0,90.0,2.5,0.5,0.25\n";

    #[test]
    fn round_trip_is_byte_identical() {
        let d = parse("d.csv", GOOD).unwrap();
        assert_eq!(d.rows.len(), 2);
        assert_eq!(d.geometry.angle, 5e-3);
        assert_eq!(to_csv(&d), GOOD);
    }

    fn line_of(text: &str) -> usize {
        match parse("d.csv", text).unwrap_err() {
            CliError::Input { line, .. } => line,
            e => panic!("{e}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of(&GOOD.replace("2.0,90.0", "2.0,ninety")), 7);
        assert_eq!(line_of(&GOOD.replace(",0.5,0.25", ",0.5")), 7);
        assert_eq!(line_of(&GOOD.replace("net_gain,", "gain,")), 5);
        assert_eq!(line_of(&GOOD.replace("angle_rad", "angle")), 1);
        assert_eq!(line_of(&GOOD.replace("1.5,100.25", "-1.5,100.25")), 6);
        assert_eq!(line_of(&GOOD.replace("# seed_sigma_lambda=100.0\n", "")), 1);
        assert_eq!(parse("d.csv", GOOD).unwrap().rows[1].sigma2, 0.25);
    }
}
