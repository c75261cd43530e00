//! Straight-line reimplementation of the weather pipeline, sharing no code
//! with the interpreter: it reads the fixture files byte by byte, joins,
//! shuffles, fits by normal equations and computes the metrics directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub r2: f64,
    pub coefficients: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
}

fn rows(path: &Path, latin1: bool, sep: char) -> Vec<Vec<String>> {
    let bytes = fs::read(path).unwrap();
    let text: String = if latin1 {
        bytes.iter().map(|&b| b as char).collect()
    } else {
        String::from_utf8(bytes).unwrap()
    };
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(sep).map(str::to_string).collect())
        .collect()
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

/// The documented 64-bit LCG shuffle.
fn shuffle(n: usize, seed: u64) -> Vec<usize> {
    let mut state = seed;
    let mut order: Vec<usize> = (0..n).collect();
    let mut i = n;
    while i > 1 {
        i -= 1;
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let j = ((state >> 33) % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    order
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// OLS with intercept through the normal equations `XᵀX b = Xᵀy`.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len() + 1;
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &t) in x.iter().zip(y) {
        let full: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
        for i in 0..p {
            xty[i] += full[i] * t;
            for j in 0..p {
                xtx[i][j] += full[i] * full[j];
            }
        }
    }
    solve(xtx, xty)
}

/// Runs the weather pipeline (station ⋈ forecast, 0.75 split, linear
/// regression on humidity, pressure and forecast temperature).
pub fn weather(data_dir: &Path, seed: u64) -> Metrics {
    let station = rows(&data_dir.join("station.csv"), true, ';');
    let forecast = rows(&data_dir.join("forecast.csv"), false, ',');
    let (sh, fh) = (&station[0], &forecast[0]);
    let (sd, st, su, sp) = (
        column(sh, "date"),
        column(sh, "temperature"),
        column(sh, "humidity"),
        column(sh, "pressure"),
    );
    let (fd, ff) = (column(fh, "date_date"), column(fh, "forecast_temperature"));

    // dd.mm.yyyy -> yyyy-mm-dd, then an inner join ordered by date.
    let mut joined: BTreeMap<String, [f64; 4]> = BTreeMap::new();
    for s in &station[1..] {
        let d = &s[sd];
        let iso = format!("{}-{}-{}", &d[6..10], &d[3..5], &d[0..2]);
        for f in &forecast[1..] {
            if f[fd] == iso {
                let num = |v: &String| v.parse::<f64>().unwrap();
                joined.insert(iso.clone(), [num(&s[st]), num(&s[su]), num(&s[sp]), num(&f[ff])]);
            }
        }
    }
    let data: Vec<[f64; 4]> = joined.into_values().collect();

    let order = shuffle(data.len(), seed);
    let n_train = data.len() * 3 / 4;
    let train: Vec<[f64; 4]> = order[..n_train].iter().map(|&i| data[i]).collect();
    let test: Vec<[f64; 4]> = order[n_train..].iter().map(|&i| data[i]).collect();

    let x: Vec<Vec<f64>> = train.iter().map(|r| vec![r[1], r[2], r[3]]).collect();
    let y: Vec<f64> = train.iter().map(|r| r[0]).collect();
    let b = normal_equations(&x, &y);

    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut mean = 0.0;
    for r in &test {
        mean += r[0];
    }
    mean /= test.len() as f64;
    let mut tot = 0.0;
    for r in &test {
        let pred = b[0] + b[1] * r[1] + b[2] * r[2] + b[3] * r[3];
        abs += (r[0] - pred).abs();
        sq += (r[0] - pred) * (r[0] - pred);
        tot += (r[0] - mean) * (r[0] - mean);
    }
    let n = test.len() as f64;
    Metrics {
        mae: abs / n,
        mse: sq / n,
        r2: 1.0 - sq / tot,
        coefficients: b,
        n_train,
        n_test: test.len(),
    }
}
