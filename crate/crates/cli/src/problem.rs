//! TOML problem files.

use std::collections::BTreeMap;
use std::path::Path;
use std::result::Result;

use coupling_core::linalg::standard_symplectic;
use coupling_core::matrix::{self, SeriesMatrix};
use coupling_core::*;
use num_traits::FromPrimitive;
use serde::Deserialize;

use crate::CliError;

/// A coefficient: an expression string, or a bare TOML number.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

pub type Entries = BTreeMap<String, Value>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSection {
    pub base_dim: usize,
    pub fiber_dim: usize,
    pub trunc_order: u32,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidSection {
    #[serde(default)]
    pub lambda: Entries,
    #[serde(default)]
    pub theta: Entries,
    #[serde(default, rename = "R")]
    pub r: Entries,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    pub points: Vec<Vec<Value>>,
    #[serde(default)]
    pub closed: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub t_samples: Option<Vec<Value>>,
    pub steps: Option<usize>,
    /// Sample points for the numeric flow, all coordinates.
    pub points: Option<Vec<Vec<f64>>>,
    pub tolerance: Option<f64>,
    /// Base points for the coisotropy test of `algebroid-check`.
    pub base_points: Option<Vec<Vec<Value>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub chart: ChartSection,
    pub omega: Option<Entries>,
    pub omega_inv: Option<Entries>,
    pub connection: Option<Entries>,
    pub vertical: Option<Entries>,
    pub fform: Option<Entries>,
    pub fform_inv: Option<Entries>,
    pub bivector: Option<Entries>,
    pub algebroid: Option<AlgebroidSection>,
    pub algebroid2: Option<AlgebroidSection>,
    pub mu: Option<Entries>,
    pub phi: Option<Entries>,
    #[serde(default)]
    pub paths: Vec<PathSection>,
    #[serde(default)]
    pub settings: Settings,
}

/// A parsed problem file bound to its chart.
#[derive(Debug)]
pub struct Problem {
    pub file: ProblemFile,
    pub chart: ChartSpec,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

impl Problem {
    pub fn load(path: &Path, order: Option<u32>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        Self::from_str(&text, order)
    }

    pub fn from_str(text: &str, order: Option<u32>) -> Result<Self, CliError> {
        let file: ProblemFile = toml::from_str(text).map_err(|e| input(format!("problem file: {e}")))?;
        let c = &file.chart;
        let chart = ChartSpec::new(c.base_dim, c.fiber_dim, order.unwrap_or(c.trunc_order))
            .map_err(|e| input(format!("chart: {e}")))?;
        Ok(Self { file, chart })
    }

    fn series(&self, v: &Value, what: &str) -> Result<FiberSeries, CliError> {
        match v {
            Value::Text(s) => parse_series(s, self.chart).map_err(|e| input(format!("{what}: {e}"))),
            other => Ok(FiberSeries::constant(self.chart, rational(other, what)?)),
        }
    }

    /// 1-indexed comma-separated key to 0-indexed tuple with bounds.
    fn key(key: &str, bounds: &[usize], what: &str) -> Result<Vec<usize>, CliError> {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        if parts.len() != bounds.len() {
            return Err(input(format!("{what}: key `{key}` needs {} indices", bounds.len())));
        }
        parts
            .iter()
            .zip(bounds)
            .map(|(p, &b)| match p.parse::<usize>() {
                Ok(i) if (1..=b).contains(&i) => Ok(i - 1),
                _ => Err(input(format!("{what}: index `{p}` in key `{key}` outside 1..={b}"))),
            })
            .collect()
    }

    fn entries<'a>(
        &'a self,
        map: &'a Entries,
        bounds: &'a [usize],
        what: &'a str,
    ) -> impl Iterator<Item = Result<(Vec<usize>, FiberSeries), CliError>> + 'a {
        map.iter().map(move |(k, v)| {
            let idx = Self::key(k, bounds, what)?;
            Ok((idx, self.series(v, &format!("{what} {k}"))?))
        })
    }

    fn antisymmetric(&self, map: &Entries, n: usize, what: &str) -> Result<SeriesMatrix, CliError> {
        let mut m = matrix::zeros(self.chart, n, n);
        for e in self.entries(map, &[n, n], what) {
            let (idx, v) = e?;
            let (i, j) = (idx[0], idx[1]);
            if i == j {
                return Err(input(format!("{what}: diagonal entry {},{} of an antisymmetric matrix", i + 1, j + 1)));
            }
            m[j][i] = &m[j][i] - &v;
            m[i][j] = &m[i][j] + &v;
        }
        Ok(m)
    }

    pub fn has_geometric_sections(&self) -> bool {
        let f = &self.file;
        f.connection.is_some() || f.vertical.is_some() || f.fform.is_some()
    }

    /// Geometric data from the `connection`/`vertical`/`fform` sections, or
    /// built from `algebroid` when those are absent.
    pub fn geometric_data(&self) -> Result<GeometricData, CliError> {
        if !self.has_geometric_sections() {
            if self.file.algebroid.is_some() {
                return Ok(build_geometric_data(&self.algebroid(false)?)?);
            }
            return Err(input("problem has neither geometric data nor an algebroid section"));
        }
        let c = self.chart;
        let (n, r) = (c.base_dim, c.fiber_dim);
        let mut gamma = vec![vec![FiberSeries::zero(c); r]; n];
        if let Some(map) = &self.file.connection {
            for e in self.entries(map, &[n, r], "connection") {
                let (idx, v) = e?;
                gamma[idx[0]][idx[1]] = v;
            }
        }
        let mut v = Multivector::zero(c, 2);
        if let Some(map) = &self.file.vertical {
            for e in self.entries(map, &[r, r], "vertical") {
                let (idx, s) = e?;
                if idx[0] == idx[1] {
                    return Err(input("vertical: diagonal entry"));
                }
                v.add_component(&[n + idx[0], n + idx[1]], s);
            }
        }
        let fmap = self.file.fform.as_ref().ok_or_else(|| input("missing [fform] section"))?;
        let f = HForm::two_form(c, &self.antisymmetric(fmap, n, "fform")?)?;
        let seed = match &self.file.fform_inv {
            Some(map) => Some(self.antisymmetric(map, n, "fform_inv")?),
            None => None,
        };
        Ok(GeometricData::new(Connection::new(c, gamma)?, v, f, seed)?)
    }

    pub fn bivector(&self) -> Result<Multivector, CliError> {
        let map = self.file.bivector.as_ref().ok_or_else(|| input("missing [bivector] section"))?;
        let d = self.chart.dim();
        let mut p = Multivector::zero(self.chart, 2);
        for e in self.entries(map, &[d, d], "bivector") {
            let (idx, s) = e?;
            if idx[0] == idx[1] {
                return Err(input("bivector: diagonal entry"));
            }
            p.add_component(&idx, s);
        }
        Ok(p)
    }

    /// `ω` defaults to `Σ dξ^{2i−1}∧dξ^{2i}`.
    fn omega(&self) -> Result<(SeriesMatrix, Option<SeriesMatrix>), CliError> {
        let n = self.chart.base_dim;
        let omega = match &self.file.omega {
            Some(map) => self.antisymmetric(map, n, "omega")?,
            None if n.is_multiple_of(2) => matrix::from_rational(self.chart, &standard_symplectic(n / 2)),
            None => return Err(input("odd base dimension requires an explicit [omega]")),
        };
        let inv = match &self.file.omega_inv {
            Some(map) => Some(self.antisymmetric(map, n, "omega_inv")?),
            None => None,
        };
        Ok((omega, inv))
    }

    pub fn algebroid(&self, second: bool) -> Result<AlgebroidData, CliError> {
        let (name, sec) = if second {
            ("algebroid2", self.file.algebroid2.as_ref())
        } else {
            ("algebroid", self.file.algebroid.as_ref())
        };
        let sec = sec.ok_or_else(|| input(format!("missing [{name}] section")))?;
        let c = self.chart;
        let (n, r) = (c.base_dim, c.fiber_dim);
        let (omega, inv) = self.omega()?;
        let mut a = match inv {
            Some(inv) => AlgebroidData::zeroed(c, omega, inv),
            None => {
                let k = matrix::as_constant(&omega).ok_or_else(|| input("non-constant omega requires [omega_inv]"))?;
                AlgebroidData::with_constant_omega(c, &k)?
            }
        };
        for e in self.entries(&sec.lambda, &[r, r, r], &format!("{name}.lambda")) {
            let (idx, v) = e?;
            if idx[0] == idx[1] {
                return Err(input(format!("{name}.lambda: diagonal entry")));
            }
            a.set_lambda(idx[0], idx[1], idx[2], v);
        }
        for e in self.entries(&sec.theta, &[n, r, r], &format!("{name}.theta")) {
            let (idx, v) = e?;
            a.set_theta(idx[0], idx[1], idx[2], v);
        }
        for e in self.entries(&sec.r, &[n, n, r], &format!("{name}.R")) {
            let (idx, v) = e?;
            if idx[0] == idx[1] {
                return Err(input(format!("{name}.R: diagonal entry")));
            }
            a.set_r(idx[0], idx[1], idx[2], v);
        }
        a.validate()?;
        Ok(a)
    }

    pub fn mu(&self) -> Result<ConnectionChange, CliError> {
        let c = self.chart;
        let Some(map) = &self.file.mu else { return Ok(ConnectionChange::zero(c)) };
        let mut mu = vec![vec![FiberSeries::zero(c); c.fiber_dim]; c.base_dim];
        for e in self.entries(map, &[c.base_dim, c.fiber_dim], "mu") {
            let (idx, v) = e?;
            mu[idx[0]][idx[1]] = v;
        }
        Ok(ConnectionChange::new(c, mu)?)
    }

    pub fn phi(&self) -> Result<PhiForm, CliError> {
        let c = self.chart;
        let map = self.file.phi.as_ref().ok_or_else(|| input("missing [phi] section"))?;
        let mut phi = vec![FiberSeries::zero(c); c.base_dim];
        for e in self.entries(map, &[c.base_dim], "phi") {
            let (idx, v) = e?;
            phi[idx[0]] = v;
        }
        Ok(PhiForm::new(phi)?)
    }

    pub fn paths(&self) -> Result<Vec<BasePath>, CliError> {
        if self.file.paths.is_empty() {
            return Err(input("no [[paths]] given"));
        }
        let n = self.chart.base_dim;
        self.file
            .paths
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let what = format!("path {}", k + 1);
                let mut points = rational_points(&p.points, n, &what)?;
                if p.closed && points.len() > 1 && points.first() != points.last() {
                    points.push(points[0].clone());
                }
                Ok(BasePath::new(points, p.closed)?)
            })
            .collect()
    }

    pub fn base_points(&self) -> Result<Option<Vec<Vec<Rational>>>, CliError> {
        match &self.file.settings.base_points {
            Some(p) => Ok(Some(rational_points(p, self.chart.base_dim, "settings.base_points")?)),
            None => Ok(None),
        }
    }

    pub fn t_samples(&self) -> Result<Option<Vec<Rational>>, CliError> {
        match &self.file.settings.t_samples {
            Some(ts) => Ok(Some(ts.iter().map(|v| rational(v, "settings.t_samples")).collect::<Result<_, _>>()?)),
            None => Ok(None),
        }
    }
}

fn rational_points(points: &[Vec<Value>], n: usize, what: &str) -> Result<Vec<Vec<Rational>>, CliError> {
    points
        .iter()
        .map(|pt| {
            if pt.len() != n {
                return Err(input(format!("{what}: point has {} coordinates, expected {n}", pt.len())));
            }
            pt.iter().map(|v| rational(v, what)).collect()
        })
        .collect()
}

/// Exact rational from an integer, a float, or text such as `-3/4`.
pub fn rational(v: &Value, what: &str) -> Result<Rational, CliError> {
    match v {
        Value::Int(i) => Ok(int(*i)),
        Value::Float(f) => Rational::from_f64(*f).ok_or_else(|| input(format!("{what}: {f} is not finite"))),
        Value::Text(s) => parse_rational(s).ok_or_else(|| input(format!("{what}: `{s}` is not a rational number"))),
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let q = match body.split_once('/') {
        Some((p, d)) => {
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                return None;
            }
            rat(p.trim().parse().ok()?, d)
        }
        None => int(body.parse().ok()?),
    };
    Some(if neg { -q } else { q })
}

/// Numeric points, one per line, separated by whitespace or commas.
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| input(format!("points file: bad number `{t}`"))))
                .collect()
        })
        .collect()
}
