//! Method names, term recipes and declared polynomial degrees.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the own-rate term and the remaining users are handled before any
/// extra terms are added.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Base {
    /// Own term exact, every other user's rate term linearized.
    Iasb,
    /// Own term exact, every other user's term bounded through its received power.
    Cadsb,
    /// Every user's term replaced by its logarithmic lower bound.
    Scale,
}

/// Which tuning rule sets the quadratic coefficient `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuadMode {
    /// Largest `L` keeping the linearized part concave.
    Tight,
    /// Additionally keeps the kept part convex.
    Convex,
}

/// How many other users receive the logarithmic lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlphaSet {
    None,
    Refs(usize),
    AllOthers,
}

/// Term multiset of a method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Recipe {
    pub base: Base,
    pub beta: bool,
    pub quad: Option<QuadMode>,
    /// Keep the first reference user's rate term exactly.
    pub exact_ref: bool,
    pub alpha: AlphaSet,
}

impl Recipe {
    const fn iasb() -> Self {
        Recipe {
            base: Base::Iasb,
            beta: false,
            quad: None,
            exact_ref: false,
            alpha: AlphaSet::None,
        }
    }

    /// Number of reference users the recipe consumes, given `N` users.
    pub fn refs_needed(&self) -> usize {
        let alpha = match self.alpha {
            AlphaSet::Refs(c) => c,
            _ => 0,
        };
        usize::from(self.exact_ref) + alpha
    }

    /// Degree of the stationarity polynomial when every term is active.
    pub fn declared_degree(&self, num_users: usize) -> usize {
        let others = num_users.saturating_sub(1);
        match self.base {
            Base::Cadsb | Base::Scale => 1 + others,
            Base::Iasb => {
                let alpha = match self.alpha {
                    AlphaSet::None => 0,
                    AlphaSet::Refs(c) => c,
                    AlphaSet::AllOthers => others,
                };
                1 + usize::from(self.quad.is_some()) + 2 * usize::from(self.exact_ref) + alpha
            }
        }
    }

    /// Whether the kept part is convex for every instance.
    pub fn always_convex(&self) -> bool {
        match self.base {
            Base::Cadsb | Base::Scale => true,
            Base::Iasb => {
                !self.exact_ref
                    && self.alpha == AlphaSet::None
                    && !matches!(self.quad, Some(QuadMode::Tight))
            }
        }
    }
}

/// A named method or a generalized `ia<d>-<terms>` descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Cadsb,
    Scale,
    /// IASB1 through IASB10.
    Iasb(u8),
    /// IASB2 with `L` restricted so the kept part stays convex.
    Iasb2Convex,
    Generalized(Recipe),
}

impl MethodKind {
    /// The twelve methods with fixed names, in a stable order.
    pub const NAMED: [MethodKind; 12] = [
        MethodKind::Cadsb,
        MethodKind::Scale,
        MethodKind::Iasb(1),
        MethodKind::Iasb(2),
        MethodKind::Iasb(3),
        MethodKind::Iasb(4),
        MethodKind::Iasb(5),
        MethodKind::Iasb(6),
        MethodKind::Iasb(7),
        MethodKind::Iasb(8),
        MethodKind::Iasb(9),
        MethodKind::Iasb(10),
    ];

    pub fn recipe(&self) -> Recipe {
        let r = Recipe::iasb();
        match *self {
            MethodKind::Cadsb => Recipe { base: Base::Cadsb, ..r },
            MethodKind::Scale => Recipe {
                base: Base::Scale,
                alpha: AlphaSet::AllOthers,
                ..r
            },
            MethodKind::Iasb2Convex => Recipe {
                quad: Some(QuadMode::Convex),
                ..r
            },
            MethodKind::Iasb(i) => match i {
                1 => r,
                2 => Recipe { quad: Some(QuadMode::Tight), ..r },
                3 => Recipe { exact_ref: true, ..r },
                4 => Recipe { alpha: AlphaSet::Refs(1), ..r },
                5 => Recipe { alpha: AlphaSet::Refs(2), ..r },
                6 => Recipe { beta: true, ..r },
                7 => Recipe { beta: true, exact_ref: true, ..r },
                8 => Recipe { beta: true, alpha: AlphaSet::Refs(2), ..r },
                9 => Recipe {
                    alpha: AlphaSet::Refs(1),
                    quad: Some(QuadMode::Tight),
                    ..r
                },
                10 => Recipe { alpha: AlphaSet::AllOthers, ..r },
                _ => unreachable!("IASB index out of range"),
            },
            MethodKind::Generalized(r) => r,
        }
    }

    pub fn declared_degree(&self, num_users: usize) -> usize {
        self.recipe().declared_degree(num_users)
    }

    /// Maps a recipe back to a named method when one matches.
    pub fn from_recipe(recipe: Recipe) -> Self {
        if recipe == MethodKind::Iasb2Convex.recipe() {
            return MethodKind::Iasb2Convex;
        }
        MethodKind::NAMED
            .into_iter()
            .find(|k| k.recipe() == recipe)
            .unwrap_or(MethodKind::Generalized(recipe))
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodKind::Cadsb => f.write_str("cadsb"),
            MethodKind::Scale => f.write_str("scale"),
            MethodKind::Iasb(i) => write!(f, "iasb{i}"),
            MethodKind::Iasb2Convex => f.write_str("iasb2c"),
            MethodKind::Generalized(r) => {
                let mut terms = String::new();
                if r.beta {
                    terms.push('b');
                }
                if r.exact_ref {
                    terms.push('r');
                }
                match r.alpha {
                    AlphaSet::None => {}
                    AlphaSet::Refs(1) => terms.push('a'),
                    AlphaSet::Refs(c) => terms.push_str(&format!("a{c}")),
                    AlphaSet::AllOthers => terms.push_str("an"),
                }
                match r.quad {
                    Some(QuadMode::Tight) => terms.push('l'),
                    Some(QuadMode::Convex) => terms.push_str("lc"),
                    None => {}
                }
                let degree = match r.alpha {
                    AlphaSet::AllOthers => "n".to_string(),
                    _ => r.declared_degree(0).to_string(),
                };
                if terms.is_empty() {
                    write!(f, "ia{degree}")
                } else {
                    write!(f, "ia{degree}-{terms}")
                }
            }
        }
    }
}

fn parse_terms(name: &str, terms: &str) -> Result<Recipe> {
    let bad = |reason: &str| Error::UnknownMethod(format!("{name} ({reason})"));
    let mut r = Recipe::iasb();
    let chars: Vec<char> = terms.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            'b' if !r.beta => r.beta = true,
            'r' if !r.exact_ref => r.exact_ref = true,
            'l' if r.quad.is_none() => {
                if chars.get(i + 1) == Some(&'c') {
                    i += 1;
                    r.quad = Some(QuadMode::Convex);
                } else {
                    r.quad = Some(QuadMode::Tight);
                }
            }
            'a' if r.alpha == AlphaSet::None => {
                let rest: String = chars[i + 1..].iter().take_while(|c| c.is_ascii_digit() || **c == 'n').collect();
                if rest == "n" {
                    r.alpha = AlphaSet::AllOthers;
                    i += 1;
                } else if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                    let count: usize = rest.parse().map_err(|_| bad("bad alpha count"))?;
                    if count == 0 {
                        return Err(bad("alpha count must be positive"));
                    }
                    r.alpha = AlphaSet::Refs(count);
                    i += rest.len();
                } else {
                    r.alpha = AlphaSet::Refs(1);
                }
            }
            c => return Err(bad(&format!("unexpected or repeated term `{c}`"))),
        }
        i += 1;
    }
    Ok(r)
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_ascii_lowercase();
        match name.as_str() {
            "cadsb" | "ca-dsb" => return Ok(MethodKind::Cadsb),
            "scale" => return Ok(MethodKind::Scale),
            "iasb2c" | "iasb2-convex" => return Ok(MethodKind::Iasb2Convex),
            _ => {}
        }
        if let Some(idx) = name.strip_prefix("iasb") {
            return match idx.parse::<u8>() {
                Ok(i @ 1..=10) => Ok(MethodKind::Iasb(i)),
                _ => Err(Error::UnknownMethod(s.to_string())),
            };
        }
        let Some(body) = name.strip_prefix("ia") else {
            return Err(Error::UnknownMethod(s.to_string()));
        };
        let (degree, terms) = body.split_once('-').unwrap_or((body, ""));
        let recipe = parse_terms(s, terms)?;
        let all_others = recipe.alpha == AlphaSet::AllOthers;
        match degree {
            "n" if all_others => {}
            "n" => {
                return Err(Error::UnknownMethod(format!(
                    "{s} (degree `n` requires the `an` term)"
                )))
            }
            d => {
                let d: usize = d
                    .parse()
                    .map_err(|_| Error::UnknownMethod(s.to_string()))?;
                if all_others || d != recipe.declared_degree(0) {
                    return Err(Error::UnknownMethod(format!(
                        "{s} (terms imply degree {})",
                        if all_others { "n".to_string() } else { recipe.declared_degree(0).to_string() }
                    )));
                }
            }
        }
        Ok(MethodKind::from_recipe(recipe))
    }
}
