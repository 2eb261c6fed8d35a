//! The coefficient body `K₁₁` of normalized Herglotz functions on the bidisk.
//!
//! A point `(1, c01, c10, c11)` (coefficients of `1, w, z, zw`) belongs to
//! `K₁₁` iff
//!
//! ```text
//! 2|c11 − c10·c01| + |c10|² + |c01|² ≤ 4   and   |c10| + |c01| ≤ 2.
//! ```
//!
//! Non-normalized data `c00` with `Re c00 > 0` is reduced to this case by a
//! Möbius automorphism `Φ` of the right half-plane with `Φ(c00) = 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyseries::{c64, MultiIndex, TruncatedPoly, C64};

/// Slack below which an inequality still counts as satisfied.
pub const MEMBER_TOL: f64 = 1e-12;

/// Taylor data of a bidisk function through `zw`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct K11Point {
    pub c00: C64,
    pub c01: C64,
    pub c10: C64,
    pub c11: C64,
}

impl K11Point {
    pub fn normalized(c01: C64, c10: C64, c11: C64) -> Self {
        Self { c00: c64(1.0, 0.0), c01, c10, c11 }
    }

    /// Coefficients as a polynomial over the box `(1,1)`.
    pub fn to_poly(&self) -> TruncatedPoly {
        TruncatedPoly::from_pairs(
            &MultiIndex::uniform(2, 1),
            &[(&[0, 0], self.c00), (&[1, 0], self.c10), (&[0, 1], self.c01), (&[1, 1], self.c11)],
        )
        .expect("indices lie in the (1,1) box")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct K11Verdict {
    pub member: bool,
    /// `4 − (2|c11 − c10·c01| + |c10|² + |c01|²)`.
    pub slack1: f64,
    /// `2 − (|c10| + |c01|)`.
    pub slack2: f64,
}

pub fn k11_check(c01: C64, c10: C64, c11: C64) -> K11Verdict {
    let slack1 = 4.0 - (2.0 * (c11 - c10 * c01).norm() + c10.norm_sqr() + c01.norm_sqr());
    let slack2 = 2.0 - (c10.norm() + c01.norm());
    K11Verdict { member: slack1 >= -MEMBER_TOL && slack2 >= -MEMBER_TOL, slack1, slack2 }
}

/// Which construction produced a [`K11Interpolant`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum K11Branch {
    /// `|c10|² + |c01|² < 4`: the bilinear-fractional `g` with parameter `σ`.
    General,
    /// `|c10|² + |c01|² = 4`: one coefficient vanishes and `g = τw` or `g = τz`.
    Boundary,
}

/// A Cayley rational inner function `φ = (1 + g)/(1 − g)`, `g = g_num/g_den`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct K11Interpolant {
    pub branch: K11Branch,
    pub sigma: Option<C64>,
    pub g_num: TruncatedPoly,
    pub g_den: TruncatedPoly,
}

impl K11Interpolant {
    pub fn eval_g(&self, z: &[C64]) -> C64 {
        self.g_num.eval(z) / self.g_den.eval(z)
    }

    pub fn eval_phi(&self, z: &[C64]) -> C64 {
        let g = self.eval_g(z);
        (1.0 + g) / (1.0 - g)
    }

    /// `φ` as numerator/denominator polynomials `(g_den + g_num, g_den − g_num)`.
    pub fn phi_rational(&self) -> (TruncatedPoly, TruncatedPoly) {
        let bound = MultiIndex::uniform(2, 1);
        let num = TruncatedPoly::from_fn(std::sync::Arc::new(crate::polyseries::enumerate_box(&bound)), |a| {
            self.g_den.coeff(a.components()) + self.g_num.coeff(a.components())
        });
        let den = TruncatedPoly::from_fn(num.bx().clone(), |a| {
            self.g_den.coeff(a.components()) - self.g_num.coeff(a.components())
        });
        (num, den)
    }
}

/// Explicit interpolant of a member point.
pub fn k11_construct(c01: C64, c10: C64, c11: C64) -> Result<K11Interpolant> {
    let verdict = k11_check(c01, c10, c11);
    if !verdict.member {
        return Err(Error::NotMember { slack1: verdict.slack1, slack2: verdict.slack2 });
    }
    let bound = MultiIndex::uniform(2, 1);
    let one = c64(1.0, 0.0);
    let energy = 4.0 - c10.norm_sqr() - c01.norm_sqr();
    if energy <= MEMBER_TOL {
        // membership forces one of c10, c01 to vanish and c11 = 0
        let (alpha, tau): (&[usize], C64) =
            if c01.norm() >= c10.norm() { (&[0, 1], c01 / 2.0) } else { (&[1, 0], c10 / 2.0) };
        return Ok(K11Interpolant {
            branch: K11Branch::Boundary,
            sigma: None,
            g_num: TruncatedPoly::from_pairs(&bound, &[(alpha, tau)])?,
            g_den: TruncatedPoly::from_pairs(&bound, &[(&[0, 0], one)])?,
        });
    }
    let sigma = 2.0 * (c11 - c10 * c01) / energy;
    let g_num = TruncatedPoly::from_pairs(&bound, &[(&[1, 0], c10 / 2.0), (&[0, 1], c01 / 2.0), (&[1, 1], sigma)])?;
    let g_den = TruncatedPoly::from_pairs(
        &bound,
        &[(&[0, 0], one), (&[1, 0], sigma * c01.conj() / 2.0), (&[0, 1], sigma * c10.conj() / 2.0)],
    )?;
    Ok(K11Interpolant { branch: K11Branch::General, sigma: Some(sigma), g_num, g_den })
}

/// `Φ(z) = (Az + B)/(Cz + D)`, a right half-plane automorphism with `Φ(c00) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HalfPlaneMobius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub gamma: C64,
}

impl HalfPlaneMobius {
    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn deriv(&self, z: C64) -> C64 {
        self.det() / (self.c * z + self.d).powi(2)
    }

    pub fn deriv2(&self, z: C64) -> C64 {
        -2.0 * self.det() * self.c / (self.c * z + self.d).powi(3)
    }
}

pub fn mobius_from_c00(c00: C64) -> Result<HalfPlaneMobius> {
    if !(c00.re > 0.0) {
        return Err(Error::Domain(format!("Re c00 must be positive, got {c00}")));
    }
    let gamma = (c00 - 1.0) / (c00 + 1.0);
    let gc = gamma.conj();
    Ok(HalfPlaneMobius { a: 2.0 - gamma - gc, b: gc - gamma, c: gamma - gc, d: 2.0 + gamma + gc, gamma })
}

/// Membership of `(c00, c01, c10, c11)`, `Re c00 > 0`, in the non-normalized body.
pub fn cf2_general_check(c00: C64, c01: C64, c10: C64, c11: C64) -> Result<bool> {
    let phi = mobius_from_c00(c00)?;
    let d1 = phi.deriv(c00);
    let d2 = phi.deriv2(c00);
    let lhs1 = 2.0 * ((d2 - d1 * d1) * c01 * c10 + d1 * c11).norm() + d1.norm_sqr() * (c01.norm_sqr() + c10.norm_sqr());
    let lhs2 = d1.norm() * (c01.norm() + c10.norm());
    Ok(lhs1 <= 4.0 + MEMBER_TOL && lhs2 <= 2.0 + MEMBER_TOL)
}

/// Data of `ψ∘φ` through `zw` from the first two derivatives of `ψ` at `c00`.
pub fn automorphism_transform(p: &K11Point, d1: C64, d2: C64) -> K11Point {
    K11Point {
        c00: c64(1.0, 0.0),
        c01: d1 * p.c01,
        c10: d1 * p.c10,
        c11: d2 * p.c01 * p.c10 + d1 * p.c11,
    }
}

/// Right half-plane automorphism fixing 1 with `Φ'(1) = e^{iθ}`.
pub fn automorphism_fixing_one(theta: f64) -> HalfPlaneMobius {
    let e = C64::from_polar(1.0, theta);
    HalfPlaneMobius { a: 1.0 + e, b: 1.0 - e, c: 1.0 - e, d: 1.0 + e, gamma: c64(0.0, 0.0) }
}
