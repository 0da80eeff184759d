//! Matrix data for the platoon and switching benchmarks, read from the
//! tab-separated transcriptions under `data/`.

const PLATOON: &str = include_str!("../../data/platoon.tsv");
const LINSWITCH: &str = include_str!("../../data/linswitch.tsv");

/// Dense `A` and single input column `b` of one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeMatrices {
    pub mode: String,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

fn malformed<T>(lineno: usize, line: &str) -> T {
    panic!("malformed matrix data at line {}: {line}", lineno + 1)
}

/// Parses `mode row col value ...` lines; `col` is 1-based or `b`.
/// Panics on malformed data, which is compiled in.
fn parse(text: &str, n: usize) -> Vec<ModeMatrices> {
    let mut out: Vec<ModeMatrices> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 4 {
            malformed::<()>(lineno, line)
        }
        let row: usize = f[1].parse().unwrap_or_else(|_| malformed(lineno, line));
        let value: f64 = f[3].parse().unwrap_or_else(|_| malformed(lineno, line));
        if row == 0 || row > n {
            malformed::<()>(lineno, line)
        }
        let idx = match out.iter().position(|m| m.mode == f[0]) {
            Some(i) => i,
            None => {
                out.push(ModeMatrices {
                    mode: f[0].to_string(),
                    a: vec![vec![0.0; n]; n],
                    b: vec![0.0; n],
                });
                out.len() - 1
            }
        };
        let m = &mut out[idx];
        if f[2] == "b" {
            m.b[row - 1] += value;
        } else {
            let col: usize = f[2].parse().unwrap_or_else(|_| malformed(lineno, line));
            if col == 0 || col > n {
                malformed::<()>(lineno, line)
            }
            m.a[row - 1][col - 1] += value;
        }
    }
    out
}

/// `q_c` then `q_n`, 18 states each.
pub fn platoon_matrices() -> Vec<ModeMatrices> {
    parse(PLATOON, 18)
}

/// `q1..q4`, 4 states each.
pub fn linswitch_matrices() -> Vec<ModeMatrices> {
    parse(LINSWITCH, 4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn platoon_modes() {
        let m = platoon_matrices();
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].mode.as_str(), m[1].mode.as_str()), ("q_c", "q_n"));
        assert_eq!(m[0].a[2][0], 1505.0);
        assert_eq!(m[0].a[0][1], 1.0);
        assert_eq!(m[0].b[1], 1.0);
        assert_eq!(m[0].b[16], -1.0);
        // kept where printed, even when off the e_i' = e_i_dot pattern
        assert_eq!(m[0].a[12][12], 1.0);
        assert_eq!(m[1].a[3][3], 1.0);
        assert_eq!(m[1].a[15][16], 1.0);
    }

    #[test]
    fn linswitch_modes() {
        let m = linswitch_matrices();
        assert_eq!(m.len(), 4);
        assert_eq!(m[0].a[0][0], -0.8036);
        for mode in &m {
            assert_eq!(mode.b, vec![-0.0845, 0.0, 0.0, -0.7342]);
        }
    }
}
