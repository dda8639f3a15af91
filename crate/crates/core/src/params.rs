//! Physical parameters `(m, mu, q, c, p)` and the derived relativistic triple.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model parameters. `c = None` selects the Schrodinger-Poisson limit (c = infinity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub m: f64,
    pub mu: f64,
    pub q: f64,
    pub c: Option<f64>,
    pub p: f64,
}

impl Params {
    pub fn nsp(m: f64, mu: f64, q: f64, p: f64) -> Self {
        Self { m, mu, q, c: None, p }
    }

    pub fn nmkg(m: f64, mu: f64, q: f64, c: f64, p: f64) -> Self {
        Self {
            m,
            mu,
            q,
            c: Some(c),
            p,
        }
    }

    pub fn with_c(self, c: Option<f64>) -> Self {
        Self { c, ..self }
    }

    pub fn with_q(self, q: f64) -> Self {
        Self { q, ..self }
    }

    pub fn is_nsp(&self) -> bool {
        self.c.is_none()
    }

    /// `1/c^2`, zero in the Schrodinger-Poisson limit.
    pub fn inv_c2(&self) -> f64 {
        self.c.map_or(0.0, |c| 1.0 / (c * c))
    }

    /// Linear coefficient `2 m mu - mu^2 / c^2`.
    pub fn mass_coeff(&self) -> f64 {
        2.0 * self.m * self.mu - self.mu * self.mu * self.inv_c2()
    }

    /// Source coupling `q (m - mu / c^2)` (`q m` for c = infinity).
    pub fn coupling(&self) -> f64 {
        self.q * (self.m - self.mu * self.inv_c2())
    }

    /// Screening coefficient `(q/c)^2`.
    pub fn screening(&self) -> f64 {
        self.q * self.q * self.inv_c2()
    }

    /// `m_bar = m c`.
    pub fn m_bar(&self) -> Option<f64> {
        self.c.map(|c| self.m * c)
    }

    /// `e = q / c`.
    pub fn e(&self) -> Option<f64> {
        self.c.map(|c| self.q / c)
    }

    /// `omega = (m c^2 - mu) / c`.
    pub fn omega(&self) -> Option<f64> {
        self.c.map(|c| (self.m * c * c - self.mu) / c)
    }

    /// Lower bound of the electrostatic potential, `-(m c^2 - mu) / q` (= `-omega/e`).
    pub fn potential_floor(&self) -> Option<f64> {
        self.c.map(|c| -(self.m * c * c - self.mu) / self.q)
    }

    /// Fails with a message naming the violated condition.
    pub fn validate(&self) -> Result<()> {
        let d = admissible(self);
        if d.admissible {
            Ok(())
        } else {
            Err(Error::Config(d.violations.join("; ")))
        }
    }
}

/// Outcome of [`admissible`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub violations: Vec<String>,
    /// `c >= sqrt(2m/mu)`, the threshold quoted for positivity of critical points.
    pub positivity_threshold: bool,
}

pub fn admissible(params: &Params) -> Admissibility {
    let Params { m, mu, q, c, p } = *params;
    let mut violations = Vec::new();
    for (name, v) in [("m", m), ("mu", mu), ("q", q)] {
        if !(v.is_finite() && v > 0.0) {
            violations.push(format!("requires {name} > 0 (got {v})"));
        }
    }
    if !(p.is_finite() && p > 2.0 && p < 6.0) {
        violations.push(format!(
            "requires 2 < p < 6 (got p = {p}); no nontrivial solutions exist for p <= 2 or p >= 6"
        ));
    }
    let mut positivity_threshold = true;
    if let Some(c) = c {
        let threshold = (mu / m).sqrt();
        if !(c.is_finite() && c > threshold) {
            violations.push(format!(
                "requires c > sqrt(mu/m) = {threshold} (got c = {c})"
            ));
        }
        positivity_threshold = c >= (2.0 * m / mu).sqrt();
    }
    Admissibility {
        admissible: violations.is_empty(),
        violations,
        positivity_threshold,
    }
}

/// `g(p)` of the Azzollini-Pisani-Pomponio existence range.
pub fn regime_g(p: f64) -> f64 {
    if p < 3.0 {
        ((p - 2.0) * (4.0 - p)).sqrt()
    } else {
        1.0
    }
}

/// `h(p)` of Wang's ground-state range.
pub fn regime_h(p: f64) -> f64 {
    1.0 + (4.0 - p).powi(2) / (4.0 * (p - 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub statement: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub m_bar: f64,
    pub e: f64,
    pub omega: f64,
    pub g: f64,
    pub h: f64,
    pub existence: Vec<Condition>,
    pub nonexistence: Vec<Condition>,
}

impl RegimeReport {
    pub fn any_existence(&self) -> bool {
        self.existence.iter().any(|c| c.holds)
    }
}

/// Known sufficient existence and nonexistence conditions for the relativistic system.
pub fn regime_report(params: &Params) -> Result<RegimeReport> {
    let c = params.c.ok_or_else(|| Error::Invalid {
        op: "regime_report",
        msg: "requires finite c".into(),
    })?;
    // p is not restricted here so that the nonexistence range can be reported
    let p = params.p;
    if !(params.m > 0.0 && params.mu > 0.0 && params.q > 0.0 && c > (params.mu / params.m).sqrt())
    {
        return Err(Error::Config(format!(
            "regime_report: requires m, mu, q > 0 and c > sqrt(mu/m) (got c = {c})"
        )));
    }
    let m_bar = params.m * c;
    let e = params.q / c;
    let omega = (params.m * c * c - params.mu) / c;
    let g = if p < 4.0 { regime_g(p) } else { f64::NAN };
    let h = regime_h(p);
    let window = 0.0 < omega && omega < m_bar;
    let cond = |name: &str, statement: &str, holds: bool| Condition {
        name: name.into(),
        statement: statement.into(),
        holds,
    };
    let existence = vec![
        cond(
            "benci-fortunato",
            "4 < p < 6 and 0 < omega < m_bar",
            4.0 < p && p < 6.0 && window,
        ),
        cond(
            "daprile-mugnai",
            "4 <= p < 6 and 0 < omega < m_bar, or 2 < p < 4 and 0 < sqrt(2) omega < m_bar sqrt(p-2)",
            ((4.0..6.0).contains(&p) && window)
                || (2.0 < p
                    && p < 4.0
                    && 0.0 < omega
                    && 2f64.sqrt() * omega < m_bar * (p - 2.0).sqrt()),
        ),
        cond(
            "azzollini-pisani-pomponio",
            "2 < p < 4 and 0 < omega < m_bar g(p)",
            2.0 < p && p < 4.0 && 0.0 < omega && omega < m_bar * g,
        ),
        cond(
            "azzollini-pomponio-ground",
            "4 <= p < 6 and 0 < omega < m_bar, or 2 < p < 4 and m_bar sqrt(p-1) > omega sqrt(5-p)",
            ((4.0..6.0).contains(&p) && window)
                || (2.0 < p && p < 4.0 && m_bar * (p - 1.0).sqrt() > omega * (5.0 - p).sqrt()),
        ),
        cond(
            "wang-ground",
            "2 < p < 4 and 0 < sqrt(h(p)) omega < m_bar",
            2.0 < p && p < 4.0 && 0.0 < omega && h.sqrt() * omega < m_bar,
        ),
    ];
    let nonexistence = vec![cond(
        "daprile-mugnai-nonexistence",
        "p <= 2 or p >= 6 with 0 < omega <= m_bar",
        (p <= 2.0 || p >= 6.0) && 0.0 < omega && omega <= m_bar,
    )];
    Ok(RegimeReport {
        m_bar,
        e,
        omega,
        g,
        h,
        existence,
        nonexistence,
    })
}
