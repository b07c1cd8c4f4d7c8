//! Initial density profiles for `evolve`.
//!
//! A profile is a `;`-separated sum of terms `kind:key=value,...`:
//!
//! * `constant:value=V`
//! * `gaussian:amp=A,center=C,width=W`, `A exp(-d^2 / (2 W^2))` with `d` the
//!   periodic distance to `C` (defaults `A = 1`, `C = L/2`, `W = 0.5`)
//! * `cosine:mode=J,amp=A,phase=P`, `A cos(2 pi J x / L + P)` (defaults
//!   `A = 1`, `P = 0`; `J` is required)

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Constant { value: f64 },
    Gaussian { amp: f64, center: Option<f64>, width: f64 },
    Cosine { mode: u32, amp: f64, phase: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub terms: Vec<Term>,
}

fn number(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("profile: '{key}' is not a number: '{v}'"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("profile: '{key}' must be finite"))
    }
}

fn take(params: &mut BTreeMap<String, String>, key: &str, default: Option<f64>) -> Result<Option<f64>, String> {
    match params.remove(key) {
        Some(v) => number(key, &v).map(Some),
        None => Ok(default),
    }
}

impl Profile {
    pub fn parse(spec: &str) -> Result<Self, String> {
        let mut terms = Vec::new();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (kind, rest) = part.split_once(':').unwrap_or((part, ""));
            let mut params = BTreeMap::new();
            for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| format!("profile: expected key=value, got '{kv}'"))?;
                params.insert(k.trim().to_string(), v.trim().to_string());
            }
            let term = match kind.trim() {
                "constant" => Term::Constant {
                    value: take(&mut params, "value", Some(1.0))?.unwrap_or(1.0),
                },
                "gaussian" => {
                    let amp = take(&mut params, "amp", Some(1.0))?.unwrap_or(1.0);
                    let center = take(&mut params, "center", None)?;
                    let width = take(&mut params, "width", Some(0.5))?.unwrap_or(0.5);
                    if width <= 0.0 {
                        return Err("profile: gaussian width must be > 0".into());
                    }
                    Term::Gaussian { amp, center, width }
                }
                "cosine" => {
                    let j = params.remove("mode").ok_or("profile: cosine needs mode=J")?;
                    let mode: u32 = j.parse().map_err(|_| format!("profile: mode must be a non-negative integer, got '{j}'"))?;
                    let amp = take(&mut params, "amp", Some(1.0))?.unwrap_or(1.0);
                    let phase = take(&mut params, "phase", Some(0.0))?.unwrap_or(0.0);
                    Term::Cosine { mode, amp, phase }
                }
                other => return Err(format!("profile: unknown term '{other}'")),
            };
            if let Some(k) = params.keys().next() {
                return Err(format!("profile: unknown parameter '{k}' for {}", kind.trim()));
            }
            terms.push(term);
        }
        if terms.is_empty() {
            return Err("profile: empty specification".into());
        }
        Ok(Self { terms })
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        use std::f64::consts::PI;
        self.terms
            .iter()
            .map(|t| match *t {
                Term::Constant { value } => value,
                Term::Gaussian { amp, center, width } => {
                    let c = center.unwrap_or(0.5 * length);
                    let d = (x - c).rem_euclid(length);
                    let d = d.min(length - d);
                    amp * (-d * d / (2.0 * width * width)).exp()
                }
                Term::Cosine { mode, amp, phase } => amp * (2.0 * PI * mode as f64 * x / length + phase).cos(),
            })
            .sum()
    }

    /// Largest `cosine` mode index in the profile.
    pub fn max_mode(&self) -> u32 {
        self.terms
            .iter()
            .filter_map(|t| match t {
                Term::Cosine { mode, .. } => Some(*mode),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}
