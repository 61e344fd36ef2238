use serde::{Deserialize, Serialize};

use crate::system::SystemConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fix {
    Free,
    Zero,
    One,
}

/// Values and pin masks of the three binary families.
///
/// `alpha` is indexed `u·J_UE + j`, `beta` is `l·J_SBS + j`, `kappa` follows
/// the link index of [`SystemConfig::link`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryState {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub alpha_fix: Vec<Fix>,
    pub beta_fix: Vec<Fix>,
    pub kappa_fix: Vec<Fix>,
}

impl BinaryState {
    /// All entries free, values zero.
    pub fn free(cfg: &SystemConfig) -> Self {
        let na = cfg.num_ues() * cfg.ue_rates.len();
        let nb = cfg.clusters * cfg.sbs_rates.len();
        let nk = cfg.num_links();
        Self {
            alpha: vec![0.0; na],
            beta: vec![0.0; nb],
            kappa: vec![0.0; nk],
            alpha_fix: vec![Fix::Free; na],
            beta_fix: vec![Fix::Free; nb],
            kappa_fix: vec![Fix::Free; nk],
        }
    }

    /// Binary assignment with every entry pinned to its value.
    pub fn fixed(alpha: Vec<f64>, beta: Vec<f64>, kappa: Vec<f64>) -> Self {
        let pin = |v: &Vec<f64>| v.iter().map(|&x| if x > 0.5 { Fix::One } else { Fix::Zero }).collect();
        Self {
            alpha_fix: pin(&alpha),
            beta_fix: pin(&beta),
            kappa_fix: pin(&kappa),
            alpha,
            beta,
            kappa,
        }
    }

    /// Same values with every pin removed.
    pub fn unpinned(&self) -> Self {
        Self {
            alpha_fix: vec![Fix::Free; self.alpha.len()],
            beta_fix: vec![Fix::Free; self.beta.len()],
            kappa_fix: vec![Fix::Free; self.kappa.len()],
            ..self.clone()
        }
    }

    /// Values rounded to {0, 1} and pinned.
    pub fn rounded(&self) -> Self {
        let r = |v: &Vec<f64>| v.iter().map(|x| if *x > 0.5 { 1.0 } else { 0.0 }).collect();
        Self::fixed(r(&self.alpha), r(&self.beta), r(&self.kappa))
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.alpha.iter().chain(&self.beta).chain(&self.kappa).copied()
    }

    pub fn is_binary(&self, tol: f64) -> bool {
        self.values().all(|x| x.abs() <= tol || (x - 1.0).abs() <= tol)
    }

    /// Mean of `(x − round(x))²` over all binary entries.
    pub fn binary_mse(&self) -> f64 {
        let n = self.alpha.len() + self.beta.len() + self.kappa.len();
        if n == 0 {
            return 0.0;
        }
        self.values().map(|x| (x - x.round()).powi(2)).sum::<f64>() / n as f64
    }

    /// Rate index chosen for UE `u`, if any (`α_{u,j} > 0.5`).
    pub fn ue_rate(&self, u: usize, j_ue: usize) -> Option<usize> {
        (0..j_ue).find(|&j| self.alpha[u * j_ue + j] > 0.5)
    }

    pub fn cluster_rate(&self, l: usize, j_sbs: usize) -> Option<usize> {
        (0..j_sbs).find(|&j| self.beta[l * j_sbs + j] > 0.5)
    }
}

/// `f(x) = Σ x_i − Σ x_i²`: zero exactly on binary vectors, positive inside the box.
pub fn binary_penalty(x: &[f64]) -> f64 {
    x.iter().map(|v| v - v * v).sum()
}

/// `f` with its concave part linearized at `x_ref`; touches `f` at `x = x_ref` and bounds it from above.
pub fn linearized_penalty(x: &[f64], x_ref: &[f64]) -> f64 {
    x.iter().zip(x_ref).map(|(v, r)| v * (1.0 - 2.0 * r) + r * r).sum()
}

/// Penalty weights per binary family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Penalties {
    pub fn uniform(lambda: f64) -> Self {
        Self { alpha: lambda, beta: lambda, kappa: lambda }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { alpha: self.alpha * s, beta: self.beta * s, kappa: self.kappa * s }
    }

    pub fn max(&self) -> f64 {
        self.alpha.max(self.beta).max(self.kappa)
    }

    /// `Σ_family λ·f(x)` at a state.
    pub fn exact(&self, s: &BinaryState) -> f64 {
        self.alpha * binary_penalty(&s.alpha) + self.beta * binary_penalty(&s.beta) + self.kappa * binary_penalty(&s.kappa)
    }

    /// `Σ_family λ·f̃(x; x_ref)`.
    pub fn linearized(&self, s: &BinaryState, reference: &BinaryState) -> f64 {
        self.alpha * linearized_penalty(&s.alpha, &reference.alpha)
            + self.beta * linearized_penalty(&s.beta, &reference.beta)
            + self.kappa * linearized_penalty(&s.kappa, &reference.kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_examples() {
        let x = [0.3, 1.0, 0.0];
        assert_eq!(linearized_penalty(&x, &[0.0; 3]), 1.3);
        assert_eq!(linearized_penalty(&[1.0], &[1.0]), 0.0);
        assert_eq!(binary_penalty(&[0.0, 1.0, 1.0]), 0.0);
        assert!(binary_penalty(&[0.5]) > 0.0);
        let r = [0.2, 0.9, 0.5];
        assert!((linearized_penalty(&r, &r) - binary_penalty(&r)).abs() < 1e-15);
    }
}
