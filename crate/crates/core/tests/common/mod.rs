#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDateTime};
use firecluster::geo::geodesic_distance;
use firecluster::temporal::parse_timestamp;
use firecluster::{Coordinate, HotspotRecord};
use rand::Rng;

pub fn ts(s: &str) -> NaiveDateTime {
    parse_timestamp(s).unwrap()
}

pub fn origin() -> NaiveDateTime {
    ts("2020-01-01 00:00:00")
}

pub fn record(lon: f64, lat: f64, minutes: i64) -> HotspotRecord {
    HotspotRecord::new(lon, lat, origin() + Duration::minutes(minutes)).unwrap()
}

/// All-pairs union-find, components relabelled by first occurrence.
pub fn brute_force_components(points: &[Coordinate], adj_dist: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if geodesic_distance(&points[i], &points[j]) <= adj_dist {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| root(&mut parent, i)).collect();
    canonical(&roots)
}

/// Renames labels in order of first occurrence so equal partitions compare equal.
pub fn canonical<T: Ord + Copy>(labels: &[T]) -> Vec<usize> {
    let mut seen = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = seen.len();
            *seen.entry(*l).or_insert(next)
        })
        .collect()
}

pub fn same_partition<A: Ord + Copy, B: Ord + Copy>(a: &[A], b: &[B]) -> bool {
    canonical(a) == canonical(b)
}

/// Vincenty inverse on WGS84; `None` when the iteration fails to converge.
pub fn vincenty(a: &Coordinate, b: &Coordinate) -> Option<f64> {
    let (sa, f) = (6_378_137.0_f64, 1.0 / 298.257_223_563);
    let sb = sa * (1.0 - f);
    let l = (b.lon() - a.lon()).to_radians();
    let u1 = ((1.0 - f) * a.lat().to_radians().tan()).atan();
    let u2 = ((1.0 - f) * b.lat().to_radians().tan()).atan();
    let (su1, cu1, su2, cu2) = (u1.sin(), u1.cos(), u2.sin(), u2.cos());
    let mut lambda = l;
    for _ in 0..1000 {
        let (sl, cl) = (lambda.sin(), lambda.cos());
        let sin_sigma = ((cu2 * sl).powi(2) + (cu1 * su2 - su1 * cu2 * cl).powi(2)).sqrt();
        if sin_sigma == 0.0 {
            return Some(0.0);
        }
        let cos_sigma = su1 * su2 + cu1 * cu2 * cl;
        let sigma = sin_sigma.atan2(cos_sigma);
        let sin_alpha = cu1 * cu2 * sl / sin_sigma;
        let cos2_alpha = 1.0 - sin_alpha * sin_alpha;
        let cos_2sm = if cos2_alpha == 0.0 {
            0.0
        } else {
            cos_sigma - 2.0 * su1 * su2 / cos2_alpha
        };
        let c = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha));
        let prev = lambda;
        lambda = l
            + (1.0 - c)
                * f
                * sin_alpha
                * (sigma
                    + c * sin_sigma * (cos_2sm + c * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)));
        if (lambda - prev).abs() < 1e-12 {
            let u_sq = cos2_alpha * (sa * sa - sb * sb) / (sb * sb);
            let big_a =
                1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
            let big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
            let delta = big_b
                * sin_sigma
                * (cos_2sm
                    + big_b / 4.0
                        * (cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)
                            - big_b / 6.0
                                * cos_2sm
                                * (-3.0 + 4.0 * sin_sigma * sin_sigma)
                                * (-3.0 + 4.0 * cos_2sm * cos_2sm)));
            return Some(sb * big_a * (sigma - delta));
        }
    }
    None
}

/// Points scattered around a centre, snapped to `grid` degrees when given.
pub fn random_points(
    rng: &mut impl Rng,
    n: usize,
    centre: (f64, f64),
    spread_deg: f64,
    grid: Option<f64>,
) -> Vec<Coordinate> {
    (0..n)
        .map(|_| {
            let mut lon = centre.0 + rng.gen_range(-spread_deg..=spread_deg);
            let mut lat = centre.1 + rng.gen_range(-spread_deg..=spread_deg);
            if let Some(g) = grid {
                lon = (lon / g).round() * g;
                lat = (lat / g).round() * g;
            }
            Coordinate::new(lon, lat.clamp(-90.0, 90.0)).unwrap()
        })
        .collect()
}

/// A random hotspot dataset on a 0.02 degree grid spanning up to `hours`.
pub fn random_dataset(rng: &mut impl Rng, n: usize, hours: i64) -> Vec<HotspotRecord> {
    let spread = rng.gen_range(0.02..0.5);
    let centre = (rng.gen_range(140.0..150.0), rng.gen_range(-39.0..-30.0));
    random_points(rng, n, centre, spread, Some(0.02))
        .into_iter()
        .map(|c| {
            let minutes = rng.gen_range(0..hours * 6) * 10;
            HotspotRecord::new(c.lon(), c.lat(), origin() + Duration::minutes(minutes)).unwrap()
        })
        .collect()
}

use firecluster::synth::{FireScenario, FireSpec, SmolderGap};
use firecluster::NOISE;

pub fn fire(lon: f64, lat: f64, start_index: u32, duration: u32) -> FireSpec {
    FireSpec {
        lon,
        lat,
        start_index,
        duration,
    }
}

pub fn scenario(fires: Vec<FireSpec>, seed: u64) -> FireScenario {
    FireScenario {
        fires,
        seed,
        ..FireScenario::default()
    }
}

pub fn single_fire(seed: u64) -> FireScenario {
    scenario(vec![fire(147.0, -37.0, 1, 30)], seed)
}

pub fn two_fires_50km(seed: u64) -> FireScenario {
    scenario(
        vec![fire(147.0, -37.0, 1, 30), fire(147.0, -36.55, 3, 30)],
        seed,
    )
}

pub fn smoldering_fire(gap: u32, seed: u64) -> FireScenario {
    let mut sc = scenario(vec![fire(147.0, -37.0, 1, 60)], seed);
    sc.smolder_gaps.push(SmolderGap {
        fire: 0,
        start: 10,
        len: gap,
    });
    sc
}

pub fn with_noise(mut sc: FireScenario, count: u32) -> FireScenario {
    sc.noise_points = count;
    sc
}

/// Two fires igniting about 10 km apart whose fronts grow into each other.
pub fn converging_fires(seed: u64) -> FireScenario {
    let mut sc = scenario(
        vec![fire(147.0, -37.0, 1, 48), fire(147.12, -37.0, 1, 48)],
        seed,
    );
    sc.spread_rate = 600.0;
    sc
}

/// Smallest distance between hotspots of different fires that share a
/// window of `active_time` indices.
pub fn closest_approach(data: &firecluster::synth::SyntheticData, active_time: u32) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..data.len() {
        for j in i + 1..data.len() {
            let (Some(a), Some(b)) = (data.fire[i], data.fire[j]) else {
                continue;
            };
            if a != b && data.index[i].abs_diff(data.index[j]) <= active_time {
                best = best.min(geodesic_distance(
                    &data.records[i].coord,
                    &data.records[j].coord,
                ));
            }
        }
    }
    best
}

/// Whether clustering memberships reproduce the expected ones exactly,
/// cluster numbering aside.
pub fn recovered(memberships: &[i64], expected: &[i64]) -> bool {
    memberships.len() == expected.len()
        && memberships
            .iter()
            .zip(expected)
            .all(|(m, e)| (*m == NOISE) == (*e == NOISE))
        && same_partition(memberships, expected)
}

/// Chains of `len` hotspots spaced 0.02 degrees of latitude (about 2.2 km),
/// one per hour, plus `isolated` single hotspots far from everything.
pub fn chains(count: usize, len: usize, isolated: usize) -> Vec<HotspotRecord> {
    let mut out = Vec::new();
    for c in 0..count {
        let lon = 145.0 + 0.5 * c as f64;
        for j in 0..len {
            out.push(record(lon, -37.0 + 0.02 * j as f64, 60 * j as i64));
        }
    }
    for k in 0..isolated {
        out.push(record(150.0 + 0.5 * k as f64, -30.0, 30 * k as i64));
    }
    out
}
