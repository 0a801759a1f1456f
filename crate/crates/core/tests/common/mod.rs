#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use madogram::m4::{lattice, presets, simulate_m4, M4Spec};
use madogram::{Location, Region};

pub fn region(locs: &[(i64, i64)]) -> Region {
    Region::new(locs.iter().map(|&p| p.into()).collect()).unwrap()
}

pub fn union_locations(x: &Region, y: &Region) -> Vec<Location> {
    x.union(y).locations().to_vec()
}

/// The three study setups: spec, region x, region y.
pub fn example(n: u8) -> (M4Spec, Region, Region) {
    let grid = lattice(0..=5, 0..=5);
    match n {
        1 => (
            presets::example_4_1(grid).unwrap(),
            region(&[(2, 1), (2, 2)]),
            region(&[(3, 3), (3, 4)]),
        ),
        2 => (
            presets::example_4_2(grid).unwrap(),
            region(&[(1, 1)]),
            region(&[(3, 2), (3, 3), (4, 3)]),
        ),
        3 => (
            presets::example_4_3(grid).unwrap(),
            region(&[(2, 1), (2, 2)]),
            region(&[(2, 3), (3, 3)]),
        ),
        _ => panic!("no example {n}"),
    }
}

fn vmax(a: f64, b: f64) -> f64 {
    a.max(b)
}

/// The printed `V_{x,y}(alpha, .., beta, ..)` of each example, written out
/// by hand.
pub fn printed_v(n: u8, a: f64, b: f64) -> f64 {
    let (ai, bi) = (1.0 / a, 1.0 / b);
    match n {
        1 => 0.25 * vmax(2.0 * ai, bi) + 0.75 * vmax(ai, bi),
        2 => 0.25 * vmax(ai, 3.0 * bi) + 0.75 * vmax(ai, bi),
        3 => {
            vmax(ai / 18.0, bi / 12.0)
                + vmax(ai, bi) / 9.0
                + vmax(ai, bi) / 6.0
                + vmax(2.0 * ai / 3.0, 3.0 * bi / 4.0)
        }
        _ => panic!("no example {n}"),
    }
}

/// The printed closed-form madogram of each example, with its own
/// hard-coded extremal coefficients.
pub fn printed_nu(n: u8, a: f64, b: f64) -> f64 {
    let v = printed_v(n, a, b);
    let (ex, ey) = match n {
        1 => (1.25, 1.0),
        2 => (1.0, 1.5),
        3 => (1.0, 10.0 / 9.0),
        _ => unreachable!(),
    };
    v / (1.0 + v) - 0.5 * (ex / (a + ex) + ey / (b + ey))
}

/// One-sample Kolmogorov-Smirnov distance to the unit Frechet law.
pub fn ks_unit_frechet(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, z)| {
            let f = (-1.0 / z).exp();
            let lo = (f - i as f64 / n).abs();
            let hi = ((i + 1) as f64 / n - f).abs();
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Stations of the synthetic precipitation fixture: `x` is the mountain
/// pair, `DEP` shares their innovations, `INDEP` draws from a separate
/// signature pattern and is independent of `x`.
pub const FIXTURE_X: [&str; 2] = ["FAJAO", "LCOMP"];
pub const FIXTURE_DEP: &str = "CFELG";
pub const FIXTURE_INDEP: &str = "PENAM";
pub const FIXTURE_STATIONS: [(&str, &str); 5] = [
    ("FAJAO", "Fajao"),
    ("LCOMP", "Lagoa Comprida"),
    ("CFELG", "Covao do Felgueira"),
    ("PENAM", "Penamacor"),
    ("BCM", "Barragem C. M."),
];
pub const FIXTURE_YEARS: std::ops::RangeInclusive<i32> = 1944..=1981;

pub fn fixture_spec() -> M4Spec {
    let blocks = [
        vec![vec![0.6, 0.4], vec![0.0, 0.0]],
        vec![vec![0.5, 0.5], vec![0.0, 0.0]],
        vec![vec![0.55, 0.45], vec![0.0, 0.0]],
        vec![vec![0.0, 0.0], vec![0.7, 0.3]],
        vec![vec![0.0, 0.0], vec![0.4, 0.6]],
    ];
    M4Spec::new(
        2,
        1,
        2,
        blocks
            .into_iter()
            .enumerate()
            .map(|(c, b)| (Location::new(c as i64, 0), b)),
    )
    .unwrap()
}

/// Annual-maxima CSV shaped like the precipitation data set: five stations,
/// 38 years, unit-Frechet fields mapped to millimetres by a per-station
/// increasing transform.
pub fn fixture_csv(seed: u64) -> String {
    let spec = fixture_spec();
    let locs: Vec<Location> = (0..5).map(|c| Location::new(c, 0)).collect();
    let n_years = FIXTURE_YEARS.count();
    let panel = simulate_m4(&spec, &locs, n_years, seed).unwrap();
    let mut out = String::from("station_id,station_name,year,value\n");
    for (c, (id, name)) in FIXTURE_STATIONS.iter().enumerate() {
        let (mu, sigma) = (60.0 + 8.0 * c as f64, 12.0 + 2.0 * c as f64);
        for (t, year) in FIXTURE_YEARS.enumerate() {
            let z = panel.row(t)[c];
            let mm = mu + sigma * (z.powf(0.2) - 1.0) / 0.2;
            writeln!(out, "{id},{name},{year},{mm:.3}").unwrap();
        }
    }
    out
}

pub fn write_fixture(dir: &Path, seed: u64) -> std::path::PathBuf {
    let path = dir.join("annual_maxima.csv");
    std::fs::write(&path, fixture_csv(seed)).unwrap();
    path
}
