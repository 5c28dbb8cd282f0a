//! Exponent/weight data of the double phase density
//! `S(x,t) = a(x) t^p(x) + b(x) t^q(x) log^s(x)(1+t)` together with the
//! standing hypotheses, validated by dense grid scans.

use crate::error::{Error, Result};
use crate::expr::{Point, ScalarField};
use crate::report::{point_vec, HypothesisEntry, HypothesisReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    /// The unit interval [0,1].
    Interval,
    /// The unit square [0,1]^2.
    UnitSquare,
}

impl DomainKind {
    pub fn dim(&self) -> usize {
        match self {
            DomainKind::Interval => 1,
            DomainKind::UnitSquare => 2,
        }
    }

    /// Default scan resolution: 10^4 points in 1D, 256^2 in 2D.
    pub fn default_scan_resolution(&self) -> usize {
        match self {
            DomainKind::Interval => 10_000,
            DomainKind::UnitSquare => 256,
        }
    }

    /// Uniform closure grid with `res` points per axis (res >= 2).
    pub fn scan_points(&self, res: usize) -> Vec<Point> {
        let res = res.max(2);
        let line = |i: usize| i as f64 / (res - 1) as f64;
        match self {
            DomainKind::Interval => (0..res).map(|i| [line(i), 0.0]).collect(),
            DomainKind::UnitSquare => {
                let mut pts = Vec::with_capacity(res * res);
                for j in 0..res {
                    for i in 0..res {
                        pts.push([line(i), line(j)]);
                    }
                }
                pts
            }
        }
    }
}

/// Subcritical reaction exponents.
#[derive(Debug, Clone)]
pub struct Subcritical {
    pub p: ScalarField,
    pub q: ScalarField,
    pub s: ScalarField,
}

/// The validated data tuple (p, q, s, a, b, N, domain).
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub p: ScalarField,
    pub q: ScalarField,
    pub s: ScalarField,
    pub a: ScalarField,
    pub b: ScalarField,
    /// Dimension N >= 2 entering the critical exponents Np/(N-p).
    pub n: u32,
    pub domain: DomainKind,
    pub sub: Option<Subcritical>,
    /// Uniform floor for q + s (must stay > 1).
    pub r: f64,
    /// Uniform floor for a + b (must stay > 0).
    pub d: f64,
}

impl ProblemData {
    /// Builds the data tuple; `r` and `d` default to the scanned minima of
    /// q+s (and, if present, q_star+s_star) and a+b, each minus 1e-9.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: ScalarField,
        q: ScalarField,
        s: ScalarField,
        a: ScalarField,
        b: ScalarField,
        n: u32,
        domain: DomainKind,
        sub: Option<Subcritical>,
        r: Option<f64>,
        d: Option<f64>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("dimension N must be >= 2, got {n}")));
        }
        let dim = domain.dim();
        for (name, f) in [("p", &p), ("q", &q), ("s", &s), ("a", &a), ("b", &b)] {
            check_coords(name, f, dim)?;
        }
        if let Some(sc) = &sub {
            for (name, f) in [("p_star", &sc.p), ("q_star", &sc.q), ("s_star", &sc.s)] {
                check_coords(name, f, dim)?;
            }
        }
        let pts = domain.scan_points(domain.default_scan_resolution());
        let r = r.unwrap_or_else(|| {
            let mut m = scan_min(&pts, |x| q.eval(x) + s.eval(x));
            if let Some(sc) = &sub {
                m = m.min(scan_min(&pts, |x| sc.q.eval(x) + sc.s.eval(x)));
            }
            m - 1e-9
        });
        let d = d.unwrap_or_else(|| scan_min(&pts, |x| a.eval(x) + b.eval(x)) - 1e-9);
        Ok(ProblemData { p, q, s, a, b, n, domain, sub, r, d })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn subcritical(&self) -> Result<&Subcritical> {
        self.sub
            .as_ref()
            .ok_or_else(|| Error::MissingSubcritical("p_star/q_star/s_star not configured".into()))
    }

    // Pointwise exponent functions. s^- and s^+ are the pointwise negative
    // and positive parts min{s,0} / max{s,0}.

    pub fn s_floor(&self, x: Point) -> f64 {
        self.s.eval(x).min(0.0)
    }

    pub fn s_ceil(&self, x: Point) -> f64 {
        self.s.eval(x).max(0.0)
    }

    /// m_-(x) = min{p, q + s^-}.
    pub fn m_minus(&self, x: Point) -> f64 {
        self.p.eval(x).min(self.q.eval(x) + self.s_floor(x))
    }

    /// n_+(x) = max{p, q + s^+}.
    pub fn n_plus(&self, x: Point) -> f64 {
        self.p.eval(x).max(self.q.eval(x) + self.s_ceil(x))
    }

    /// m_eps(x) = min{p, q + eps} (eps may be negative).
    pub fn m_eps(&self, x: Point, eps: f64) -> f64 {
        self.p.eval(x).min(self.q.eval(x) + eps)
    }

    /// n_eps(x) = max{p, q + eps}.
    pub fn n_eps(&self, x: Point, eps: f64) -> f64 {
        self.p.eval(x).max(self.q.eval(x) + eps)
    }

    /// Critical exponent Np/(N-p); meaningful only while p(x) < N.
    pub fn p_star(&self, x: Point) -> f64 {
        let (n, p) = (self.nf(), self.p.eval(x));
        n * p / (n - p)
    }

    /// Critical exponent Nq/(N-q).
    pub fn q_star(&self, x: Point) -> f64 {
        let (n, q) = (self.nf(), self.q.eval(x));
        n * q / (n - q)
    }

    /// m*_eps(x) = min{p*, q* + eps}.
    pub fn m_star_eps(&self, x: Point, eps: f64) -> f64 {
        self.p_star(x).min(self.q_star(x) + eps)
    }

    /// n*_eps(x) = max{p*, q* + eps}.
    pub fn n_star_eps(&self, x: Point, eps: f64) -> f64 {
        self.p_star(x).max(self.q_star(x) + eps)
    }

    /// m*_-(x) = min{p*, q*(1 + s^-/q)}.
    pub fn m_star_minus(&self, x: Point) -> f64 {
        let q = self.q.eval(x);
        self.p_star(x).min(self.q_star(x) * (1.0 + self.s_floor(x) / q))
    }

    /// n*_+(x) = max{p*, q*(1 + s^+/q)}.
    pub fn n_star_plus(&self, x: Point) -> f64 {
        let q = self.q.eval(x);
        self.p_star(x).max(self.q_star(x) * (1.0 + self.s_ceil(x) / q))
    }

    /// Sobolev conjugate N m/(N - m) of m_{-eps}(x) = min{p, q - eps}.
    pub fn m_minus_eps_star(&self, x: Point, eps: f64) -> f64 {
        let n = self.nf();
        let m = self.m_eps(x, -eps);
        n * m / (n - m)
    }
}

fn check_coords(name: &str, f: &ScalarField, dim: usize) -> Result<()> {
    if let Some(c) = f.max_coord() {
        if c >= dim {
            return Err(Error::MalformedField {
                field: name.to_string(),
                message: format!("references coordinate {} but the domain is {dim}D", ["x", "y"][c]),
            });
        }
    }
    Ok(())
}

fn scan_min(pts: &[Point], f: impl Fn(Point) -> f64) -> f64 {
    pts.iter().map(|&x| f(x)).fold(f64::INFINITY, f64::min)
}

/// Tracks the minimum of a margin function together with its witness point.
struct WorstScan {
    margin: f64,
    point: Point,
}

impl WorstScan {
    fn run(pts: &[Point], f: impl Fn(Point) -> f64) -> Self {
        let mut w = WorstScan { margin: f64::INFINITY, point: [0.0, 0.0] };
        for &x in pts {
            let m = f(x);
            if m < w.margin {
                w.margin = m;
                w.point = x;
            }
        }
        w
    }
}

/// Scans every standing hypothesis on a uniform grid and reports the worst
/// margin per hypothesis. Strictly positive margin at every grid point is a
/// pass. Regime entries (sublinear/superlinear and the two growth sandwich
/// conditions) are informational: they describe which reaction regime the
/// data sits in and never gate `all_pass`.
pub fn validate_hypotheses(data: &ProblemData, grid_resolution: usize) -> Result<HypothesisReport> {
    if grid_resolution < 2 {
        return Err(Error::Precondition(format!(
            "grid_resolution must be >= 2, got {grid_resolution}"
        )));
    }
    let n = data.n as f64;
    let dim = data.dim();
    let pts = data.domain.scan_points(grid_resolution);
    let mut entries = Vec::new();

    let push = |name: &str, w: WorstScan, required: bool, entries: &mut Vec<HypothesisEntry>| {
        entries.push(HypothesisEntry {
            hypothesis: name.to_string(),
            pass: w.margin > 0.0,
            worst_point: point_vec(w.point, dim),
            margin: w.margin,
            required,
        });
    };

    // 1 < p(x), q(x) < N.
    let w = WorstScan::run(&pts, |x| {
        let (p, q) = (data.p.eval(x), data.q.eval(x));
        (p - 1.0).min(n - p).min(q - 1.0).min(n - q)
    });
    push("exponent-bounds", w, true, &mut entries);

    // q(x) + s(x) >= r.
    let w = WorstScan::run(&pts, |x| data.q.eval(x) + data.s.eval(x) - data.r);
    push("log-exponent-floor", w, true, &mut entries);

    // The uniform floors themselves: r > 1 and d > 0.
    entries.push(HypothesisEntry {
        hypothesis: "uniform-floors".to_string(),
        pass: data.r > 1.0 && data.d > 0.0,
        worst_point: Vec::new(),
        margin: (data.r - 1.0).min(data.d),
        required: true,
    });

    // a, b >= 0 and a + b >= d.
    let w = WorstScan::run(&pts, |x| {
        let (a, b) = (data.a.eval(x), data.b.eval(x));
        a.min(b).min(a + b - data.d)
    });
    push("coefficient-floor", w, true, &mut entries);

    // max{p,q}/min{p,q} < 1 + 1/N.
    let w = WorstScan::run(&pts, |x| {
        let (p, q) = (data.p.eval(x), data.q.eval(x));
        1.0 + 1.0 / n - p.max(q) / p.min(q)
    });
    push("oscillation-ratio", w, true, &mut entries);

    if let Some(sc) = &data.sub {
        // 1 < p_star(x), q_star(x) < N.
        let w = WorstScan::run(&pts, |x| {
            let (ps, qs) = (sc.p.eval(x), sc.q.eval(x));
            (ps - 1.0).min(n - ps).min(qs - 1.0).min(n - qs)
        });
        push("subcritical-bounds", w, true, &mut entries);

        // p_star(x) < p*(x) and q_star(x) < q*(x).
        let w = WorstScan::run(&pts, |x| {
            (data.p_star(x) - sc.p.eval(x)).min(data.q_star(x) - sc.q.eval(x))
        });
        push("subcritical-below-critical", w, true, &mut entries);

        // q_star(x) + s_star(x) >= r.
        let w = WorstScan::run(&pts, |x| sc.q.eval(x) + sc.s.eval(x) - data.r);
        push("subcritical-log-floor", w, true, &mut entries);

        // s_star(x) < s(x).
        let w = WorstScan::run(&pts, |x| data.s.eval(x) - sc.s.eval(x));
        push("subcritical-log-weaker", w, true, &mut entries);

        // Regime indicators. Sublinear: p_star < p, q_star < q.
        let w = WorstScan::run(&pts, |x| {
            (data.p.eval(x) - sc.p.eval(x)).min(data.q.eval(x) - sc.q.eval(x))
        });
        push("sublinear-regime", w, false, &mut entries);

        // Superlinear: p <= p_star, q <= q_star.
        let w = WorstScan::run(&pts, |x| {
            (sc.p.eval(x) - data.p.eval(x)).min(sc.q.eval(x) - data.q.eval(x))
        });
        push("superlinear-regime", w, false, &mut entries);

        // Growth sandwich, sublinear side:
        // max{p_star^+, (q_star + ceil(s_star) q_star/q)^+} < min{p^-, (q+floor(s))^-}.
        let lhs = WorstScan::run(&pts, |x| {
            let qs = sc.q.eval(x);
            -(sc.p.eval(x).max(qs + sc.s.eval(x).max(0.0) * qs / data.q.eval(x)))
        });
        let rhs = WorstScan::run(&pts, |x| {
            data.p.eval(x).min(data.q.eval(x) + data.s_floor(x))
        });
        entries.push(HypothesisEntry {
            hypothesis: "sandwich-sublinear".to_string(),
            pass: rhs.margin + lhs.margin > 0.0,
            worst_point: point_vec(lhs.point, dim),
            margin: rhs.margin + lhs.margin,
            required: false,
        });

        // Growth sandwich, superlinear side:
        // max{p^+, (q + ceil(s))^+} < min{p_star^-, (q_star + floor(s_star) q_star/q)^-}.
        let lhs = WorstScan::run(&pts, |x| {
            -(data.p.eval(x).max(data.q.eval(x) + data.s_ceil(x)))
        });
        let rhs = WorstScan::run(&pts, |x| {
            let qs = sc.q.eval(x);
            sc.p.eval(x).min(qs + sc.s.eval(x).min(0.0) * qs / data.q.eval(x))
        });
        entries.push(HypothesisEntry {
            hypothesis: "sandwich-superlinear".to_string(),
            pass: rhs.margin + lhs.margin > 0.0,
            worst_point: point_vec(lhs.point, dim),
            margin: rhs.margin + lhs.margin,
            required: false,
        });
    }

    let all_pass = entries.iter().filter(|e| e.required).all(|e| e.pass);
    Ok(HypothesisReport {
        entries,
        all_pass,
        r: data.r,
        d: data.d,
        grid_resolution,
    })
}

/// Extremal exponents found by grid scan, plus the epsilon they were
/// computed with. Pointwise exponent functions live on [`ProblemData`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExponentSummary {
    pub p_minus: f64,
    pub p_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    /// ell^- = min{p^-, (q + floor(s))^-} > 1.
    pub ell_minus: f64,
    /// ell^+ = max{p^+, (q + ceil(s))^+}.
    pub ell_plus: f64,
    pub p_star_minus: f64,
    pub p_star_plus: f64,
    pub q_star_minus: f64,
    pub q_star_plus: f64,
    pub eps: f64,
}

/// Scans the extremal exponents. Errors if p or q reaches N anywhere
/// (the critical exponent would be undefined).
pub fn exponent_summary(data: &ProblemData, eps: f64) -> Result<ExponentSummary> {
    if eps < 0.0 {
        return Err(Error::Precondition(format!("eps must be >= 0, got {eps}")));
    }
    let pts = data.domain.scan_points(data.domain.default_scan_resolution());
    let n = data.n as f64;
    let mut sm = ExponentSummary {
        p_minus: f64::INFINITY,
        p_plus: f64::NEG_INFINITY,
        q_minus: f64::INFINITY,
        q_plus: f64::NEG_INFINITY,
        s_minus: f64::INFINITY,
        s_plus: f64::NEG_INFINITY,
        ell_minus: f64::INFINITY,
        ell_plus: f64::NEG_INFINITY,
        p_star_minus: f64::INFINITY,
        p_star_plus: f64::NEG_INFINITY,
        q_star_minus: f64::INFINITY,
        q_star_plus: f64::NEG_INFINITY,
        eps,
    };
    for &x in &pts {
        let (p, q, s) = (data.p.eval(x), data.q.eval(x), data.s.eval(x));
        if p >= n || q >= n {
            return Err(Error::CriticalExponentUndefined(format!(
                "p or q reaches N={} at ({}, {})",
                data.n, x[0], x[1]
            )));
        }
        sm.p_minus = sm.p_minus.min(p);
        sm.p_plus = sm.p_plus.max(p);
        sm.q_minus = sm.q_minus.min(q);
        sm.q_plus = sm.q_plus.max(q);
        sm.s_minus = sm.s_minus.min(s);
        sm.s_plus = sm.s_plus.max(s);
        sm.ell_minus = sm.ell_minus.min(p.min(q + s.min(0.0)));
        sm.ell_plus = sm.ell_plus.max(p.max(q + s.max(0.0)));
        sm.p_star_minus = sm.p_star_minus.min(data.p_star(x));
        sm.p_star_plus = sm.p_star_plus.max(data.p_star(x));
        sm.q_star_minus = sm.q_star_minus.min(data.q_star(x));
        sm.q_star_plus = sm.q_star_plus.max(data.q_star(x));
    }
    Ok(sm)
}

/// Largest eps in the geometric grid {2^-k : k = 1..40} such that
/// n_eps(x) < N m/(N-m) with m = m_{-eps}(x) holds with positive margin on
/// the scan grid. Such an eps exists whenever the oscillation-ratio
/// hypothesis holds.
pub fn pick_epsilon(data: &ProblemData) -> Result<f64> {
    let pts = data.domain.scan_points(data.domain.default_scan_resolution());
    for k in 1..=40u32 {
        let eps = 0.5f64.powi(k as i32);
        let ok = pts.iter().all(|&x| {
            let m = data.m_eps(x, -eps);
            m > 1.0 && m < data.n as f64 && data.n_eps(x, eps) < data.m_minus_eps_star(x, eps)
        });
        if ok {
            return Ok(eps);
        }
    }
    Err(Error::HypothesisInconsistency(
        "no eps in {2^-1..2^-40} separates n_eps from the conjugate of m_{-eps}".into(),
    ))
}
