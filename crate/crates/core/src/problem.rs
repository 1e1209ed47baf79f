//! Cost models: classic travel-cost routes (TSP) and energy-optimal parcel
//! delivery (ESPDP), where the energy spent on a segment depends on the load
//! still aboard and therefore on where the segment sits in the route.
//!
//! A route over `n` stops is a [`Permutation`] of `{1..n}`; the depot (index
//! 0) is implicitly prepended and appended, so every route has `n + 1`
//! segments. Instances are immutable once constructed and validated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{AdjacentMove, Permutation};
use crate::rng::RandomStream;

/// Cost oracle the solvers run against.
///
/// `cost` and `delta_cost` panic on a route/instance length mismatch; all
/// routes produced by this crate's solvers are sized to the instance.
pub trait Problem {
    /// Number of stops `n` (excluding the depot).
    fn stops(&self) -> usize;

    /// Full cost of the route `{0, sigma(1), .., sigma(n), 0}`.
    fn cost(&self, route: &Permutation) -> f64;

    /// Cost of `route` with move `m` applied, given `cached_cost` =
    /// `cost(route)`. Touches only the segments the swap disturbs.
    fn delta_cost(&self, route: &Permutation, m: AdjacentMove, cached_cost: f64) -> f64;
}

/// Row-major square matrix over `{depot} ∪ stops`, stored flat.
#[derive(Debug, Clone, PartialEq)]
struct SquareMat {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMat {
    fn from_rows(field: &'static str, rows: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInstance {
                field,
                reason: format!("expected a {dim}x{dim} matrix"),
            });
        }
        let data = rows.into_iter().flatten().collect::<Vec<_>>();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance {
                field,
                reason: "entries must be finite".into(),
            });
        }
        Ok(Self { dim, data })
    }

    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|c| c.to_vec()).collect()
    }

    fn check_nonneg_zero_diag(&self, field: &'static str) -> Result<()> {
        for i in 0..self.dim {
            if self.at(i, i) != 0.0 {
                return Err(Error::InvalidInstance {
                    field,
                    reason: format!("diagonal entry [{i}][{i}] must be 0"),
                });
            }
            for j in 0..self.dim {
                if self.at(i, j) < 0.0 {
                    return Err(Error::InvalidInstance {
                        field,
                        reason: format!("entry [{i}][{j}] is negative"),
                    });
                }
            }
        }
        Ok(())
    }
}

fn check_coordinates(
    coords: &[[f64; 2]],
    matrix: &SquareMat,
    field: &'static str,
    scale: f64,
) -> Result<()> {
    let dim = matrix.dim;
    if coords.len() != dim {
        return Err(Error::InvalidInstance {
            field: "coordinates",
            reason: format!("expected {dim} points"),
        });
    }
    for i in 0..dim {
        for j in 0..dim {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            let expect = scale * (dx * dx + dy * dy).sqrt();
            let got = matrix.at(i, j);
            let denom = expect.abs().max(got.abs());
            if denom > 0.0 && (got - expect).abs() / denom > 1e-12 {
                return Err(Error::InvalidInstance {
                    field,
                    reason: format!(
                        "entry [{i}][{j}] = {got} disagrees with point geometry ({expect})"
                    ),
                });
            }
            if denom == 0.0 && got != expect {
                return Err(Error::InvalidInstance {
                    field,
                    reason: format!("entry [{i}][{j}] nonzero for coincident points"),
                });
            }
        }
    }
    Ok(())
}

/// Travel-cost routing instance: a symmetric non-negative cost matrix over
/// the depot and `n` stops.
#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    n: usize,
    distance: SquareMat,
    coordinates: Option<Vec<[f64; 2]>>,
    seed: Option<u64>,
}

impl TspInstance {
    pub fn new(
        n: usize,
        distance: Vec<Vec<f64>>,
        coordinates: Option<Vec<[f64; 2]>>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance {
                field: "n",
                reason: "must be at least 1".into(),
            });
        }
        let distance = SquareMat::from_rows("distance", distance, n + 1)?;
        distance.check_nonneg_zero_diag("distance")?;
        for i in 0..=n {
            for j in (i + 1)..=n {
                if distance.at(i, j) != distance.at(j, i) {
                    return Err(Error::InvalidInstance {
                        field: "distance",
                        reason: format!("matrix not symmetric at [{i}][{j}]"),
                    });
                }
            }
        }
        if let Some(coords) = &coordinates {
            check_coordinates(coords, &distance, "distance", 1.0)?;
        }
        Ok(Self {
            n,
            distance,
            coordinates,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance.at(i, j)
    }

    pub fn coordinates(&self) -> Option<&[[f64; 2]]> {
        self.coordinates.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn assert_route(&self, route: &Permutation) {
        assert_eq!(
            route.len(),
            self.n,
            "route has {} stops but instance has {}",
            route.len(),
            self.n
        );
    }
}

impl Problem for TspInstance {
    fn stops(&self) -> usize {
        self.n
    }

    fn cost(&self, route: &Permutation) -> f64 {
        self.assert_route(route);
        let mut total = 0.0;
        let mut prev = 0usize;
        for k in 1..=self.n {
            let stop = route.stop_at(k) as usize;
            total += self.distance.at(prev, stop);
            prev = stop;
        }
        total + self.distance.at(prev, 0)
    }

    fn delta_cost(&self, route: &Permutation, m: AdjacentMove, cached_cost: f64) -> f64 {
        self.assert_route(route);
        let n = self.n;
        let k = m.position();
        assert!(k + 2 <= n, "move position {k} out of range for n={n}");
        let a = route.stop_at(k + 1) as usize;
        let b = route.stop_at(k + 2) as usize;
        let before = if k == 0 { 0 } else { route.stop_at(k) as usize };
        let after = if k + 2 == n {
            0
        } else {
            route.stop_at(k + 3) as usize
        };
        let old = self.distance.at(before, a) + self.distance.at(a, b) + self.distance.at(b, after);
        let new = self.distance.at(before, b) + self.distance.at(b, a) + self.distance.at(a, after);
        cached_cost - old + new
    }
}

/// Energy-optimal single-vehicle parcel delivery instance.
///
/// Segment `k` of a route costs `(W_v + remaining parcels) * coeff + rho`,
/// where the remaining-parcel load sums the weights of all stops not yet
/// visited, so the same physical segment costs more early in the route than
/// late. `coeff` is energy per unit mass, `rho` is a load-independent drag
/// term, both indexed by the physical endpoints of the segment.
#[derive(Debug, Clone, PartialEq)]
pub struct EspdpInstance {
    n: usize,
    vehicle_weight: f64,
    parcel_weights: Vec<f64>,
    coeff: SquareMat,
    resistance: SquareMat,
    coordinates: Option<Vec<[f64; 2]>>,
    seed: Option<u64>,
}

impl EspdpInstance {
    pub fn new(
        n: usize,
        vehicle_weight: f64,
        parcel_weights: Vec<f64>,
        coeff: Vec<Vec<f64>>,
        resistance: Vec<Vec<f64>>,
        coordinates: Option<Vec<[f64; 2]>>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance {
                field: "n",
                reason: "must be at least 1".into(),
            });
        }
        if !(vehicle_weight > 0.0) || !vehicle_weight.is_finite() {
            return Err(Error::InvalidInstance {
                field: "vehicle_weight",
                reason: "must be positive and finite".into(),
            });
        }
        if parcel_weights.len() != n {
            return Err(Error::InvalidInstance {
                field: "parcel_weights",
                reason: format!("expected {n} entries"),
            });
        }
        if parcel_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInstance {
                field: "parcel_weights",
                reason: "entries must be finite and non-negative".into(),
            });
        }
        let coeff = SquareMat::from_rows("coeff", coeff, n + 1)?;
        coeff.check_nonneg_zero_diag("coeff")?;
        let resistance = SquareMat::from_rows("resistance", resistance, n + 1)?;
        resistance.check_nonneg_zero_diag("resistance")?;
        if let Some(coords) = &coordinates {
            if coords.len() != n + 1 {
                return Err(Error::InvalidInstance {
                    field: "coordinates",
                    reason: format!("expected {} points", n + 1),
                });
            }
        }
        Ok(Self {
            n,
            vehicle_weight,
            parcel_weights,
            coeff,
            resistance,
            coordinates,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vehicle_weight(&self) -> f64 {
        self.vehicle_weight
    }

    pub fn parcel_weights(&self) -> &[f64] {
        &self.parcel_weights
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeff.at(i, j)
    }

    pub fn resistance(&self, i: usize, j: usize) -> f64 {
        self.resistance.at(i, j)
    }

    pub fn coordinates(&self) -> Option<&[[f64; 2]]> {
        self.coordinates.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    fn parcel(&self, stop: usize) -> f64 {
        self.parcel_weights[stop - 1]
    }

    fn assert_route(&self, route: &Permutation) {
        assert_eq!(
            route.len(),
            self.n,
            "route has {} stops but instance has {}",
            route.len(),
            self.n
        );
    }
}

impl Problem for EspdpInstance {
    fn stops(&self) -> usize {
        self.n
    }

    fn cost(&self, route: &Permutation) -> f64 {
        self.assert_route(route);
        let mut load = self.vehicle_weight + self.parcel_weights.iter().sum::<f64>();
        let mut total = 0.0;
        let mut prev = 0usize;
        for k in 1..=self.n {
            let stop = route.stop_at(k) as usize;
            total += load * self.coeff.at(prev, stop) + self.resistance.at(prev, stop);
            load -= self.parcel(stop);
            prev = stop;
        }
        // final leg back to the depot carries the bare vehicle
        total + load * self.coeff.at(prev, 0) + self.resistance.at(prev, 0)
    }

    fn delta_cost(&self, route: &Permutation, m: AdjacentMove, cached_cost: f64) -> f64 {
        self.assert_route(route);
        let n = self.n;
        let k = m.position();
        assert!(k + 2 <= n, "move position {k} out of range for n={n}");
        let a = route.stop_at(k + 1) as usize;
        let b = route.stop_at(k + 2) as usize;
        let before = if k == 0 { 0 } else { route.stop_at(k) as usize };
        let after = if k + 2 == n {
            0
        } else {
            route.stop_at(k + 3) as usize
        };
        // load on the segment entering position k+1: vehicle + every parcel
        // not yet delivered there
        let mut load_in = self.vehicle_weight;
        for pos in (k + 1)..=n {
            load_in += self.parcel(route.stop_at(pos) as usize);
        }
        let load_out = load_in - self.parcel(a) - self.parcel(b);
        let old = load_in * self.coeff.at(before, a)
            + self.resistance.at(before, a)
            + (load_in - self.parcel(a)) * self.coeff.at(a, b)
            + self.resistance.at(a, b)
            + load_out * self.coeff.at(b, after)
            + self.resistance.at(b, after);
        let new = load_in * self.coeff.at(before, b)
            + self.resistance.at(before, b)
            + (load_in - self.parcel(b)) * self.coeff.at(b, a)
            + self.resistance.at(b, a)
            + load_out * self.coeff.at(a, after)
            + self.resistance.at(a, after);
        cached_cost - old + new
    }
}

/// Either kind of instance, as stored in an instance document.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Espdp(EspdpInstance),
    Tsp(TspInstance),
}

impl Problem for Instance {
    fn stops(&self) -> usize {
        match self {
            Instance::Espdp(i) => i.stops(),
            Instance::Tsp(i) => i.stops(),
        }
    }

    fn cost(&self, route: &Permutation) -> f64 {
        match self {
            Instance::Espdp(i) => i.cost(route),
            Instance::Tsp(i) => i.cost(route),
        }
    }

    fn delta_cost(&self, route: &Permutation, m: AdjacentMove, cached_cost: f64) -> f64 {
        match self {
            Instance::Espdp(i) => i.delta_cost(route, m, cached_cost),
            Instance::Tsp(i) => i.delta_cost(route, m, cached_cost),
        }
    }
}

/// On-disk instance document. One schema serves both kinds; a `tsp` document
/// stores its distance matrix in `coeff` with unit vehicle weight, zero
/// parcels and zero resistance, which makes the two cost models coincide.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    kind: String,
    n: usize,
    vehicle_weight: f64,
    parcel_weights: Vec<f64>,
    coeff: Vec<Vec<f64>>,
    resistance: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coordinates: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Espdp(_) => "espdp",
            Instance::Tsp(_) => "tsp",
        }
    }

    pub fn n(&self) -> usize {
        self.stops()
    }

    /// Serializes to the instance document (pretty JSON, trailing newline).
    pub fn to_json(&self) -> String {
        let doc = match self {
            Instance::Espdp(i) => InstanceDoc {
                kind: "espdp".into(),
                n: i.n,
                vehicle_weight: i.vehicle_weight,
                parcel_weights: i.parcel_weights.clone(),
                coeff: i.coeff.rows(),
                resistance: i.resistance.rows(),
                coordinates: i.coordinates.clone(),
                seed: i.seed,
            },
            Instance::Tsp(i) => InstanceDoc {
                kind: "tsp".into(),
                n: i.n,
                vehicle_weight: 1.0,
                parcel_weights: vec![0.0; i.n],
                coeff: i.distance.rows(),
                resistance: SquareMat::zeros(i.n + 1).rows(),
                coordinates: i.coordinates.clone(),
                seed: i.seed,
            },
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Parses and validates an instance document.
    pub fn from_json(text: &str) -> Result<Instance> {
        let doc: InstanceDoc =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        match doc.kind.as_str() {
            "espdp" => Ok(Instance::Espdp(EspdpInstance::new(
                doc.n,
                doc.vehicle_weight,
                doc.parcel_weights,
                doc.coeff,
                doc.resistance,
                doc.coordinates,
                doc.seed,
            )?)),
            "tsp" => {
                if doc.vehicle_weight != 1.0 {
                    return Err(Error::InvalidInstance {
                        field: "vehicle_weight",
                        reason: "must be 1.0 for kind \"tsp\"".into(),
                    });
                }
                if doc.parcel_weights.len() != doc.n
                    || doc.parcel_weights.iter().any(|&w| w != 0.0)
                {
                    return Err(Error::InvalidInstance {
                        field: "parcel_weights",
                        reason: format!("must be {} zeros for kind \"tsp\"", doc.n),
                    });
                }
                if doc.resistance.iter().flatten().any(|&v| v != 0.0) {
                    return Err(Error::InvalidInstance {
                        field: "resistance",
                        reason: "must be all zeros for kind \"tsp\"".into(),
                    });
                }
                Ok(Instance::Tsp(TspInstance::new(
                    doc.n,
                    doc.coeff,
                    doc.coordinates,
                    doc.seed,
                )?))
            }
            other => Err(Error::Schema(format!(
                "unknown kind {other:?}; expected \"espdp\" or \"tsp\""
            ))),
        }
    }
}

/// Settings for random ESPDP generation. Stops are placed uniformly in the
/// unit square; energy coefficients and drag grow linearly with Euclidean
/// distance so the model stays physical and reduces to plain travel cost
/// when parcels vanish.
#[derive(Debug, Clone)]
pub struct EspdpGenParams {
    /// Vehicle mass `W_v`.
    pub vehicle_weight: f64,
    /// Energy per unit mass per unit distance: `coeff = alpha * d`.
    pub coeff_per_distance: f64,
    /// Drag per unit distance as a fraction of `W_v`: `rho = f * W_v * d`.
    pub resistance_factor: f64,
    /// Parcel weights drawn uniformly in `range * W_v / n`.
    pub parcel_range: (f64, f64),
}

impl Default for EspdpGenParams {
    fn default() -> Self {
        Self {
            vehicle_weight: 10.0,
            coeff_per_distance: 1.0,
            resistance_factor: 0.1,
            parcel_range: (0.1, 1.0),
        }
    }
}

impl EspdpGenParams {
    fn validate(&self) -> Result<()> {
        let ok = self.vehicle_weight > 0.0
            && self.coeff_per_distance > 0.0
            && self.resistance_factor >= 0.0
            && self.parcel_range.0 > 0.0
            && self.parcel_range.1 >= self.parcel_range.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid generator params: {self:?}")))
        }
    }
}

fn random_points(count: usize, rng: &mut RandomStream) -> Vec<[f64; 2]> {
    (0..count)
        .map(|_| [rng.uniform(), rng.uniform()])
        .collect()
}

fn euclidean_mat(points: &[[f64; 2]], scale: f64) -> SquareMat {
    let dim = points.len();
    let mut m = SquareMat::zeros(dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            let d = scale * (dx * dx + dy * dy).sqrt();
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    m
}

/// Random ESPDP instance: depot plus `n` stops in the unit square,
/// distance-proportional coefficients, parcels scaled so total payload is
/// comparable to the vehicle weight at any `n`. Deterministic in the stream.
pub fn generate_espdp(
    n: usize,
    rng: &mut RandomStream,
    params: &EspdpGenParams,
) -> Result<EspdpInstance> {
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    params.validate()?;
    let seed = rng.seed();
    let points = random_points(n + 1, rng);
    let (lo, hi) = params.parcel_range;
    let unit = params.vehicle_weight / n as f64;
    let parcels: Vec<f64> = (0..n)
        .map(|_| rng.uniform_in(lo * unit, hi * unit))
        .collect();
    let coeff = euclidean_mat(&points, params.coeff_per_distance);
    let resistance = euclidean_mat(&points, params.resistance_factor * params.vehicle_weight);
    EspdpInstance::new(
        n,
        params.vehicle_weight,
        parcels,
        coeff.rows(),
        resistance.rows(),
        Some(points),
        Some(seed),
    )
}

/// Random Euclidean TSP instance on the unit square.
pub fn generate_tsp(n: usize, rng: &mut RandomStream) -> Result<TspInstance> {
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    let seed = rng.seed();
    let points = random_points(n + 1, rng);
    let distance = euclidean_mat(&points, 1.0);
    TspInstance::new(n, distance.rows(), Some(points), Some(seed))
}
