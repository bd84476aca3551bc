//! Which approximation each user uses on each tone.

use crate::approx::{ApproximationSpec, MethodKind};
use crate::error::{Error, Result};

/// Approximation spec for every `(k, n)` pair, stored tone-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodAssignment {
    num_users: usize,
    num_tones: usize,
    specs: Vec<ApproximationSpec>,
}

impl MethodAssignment {
    pub fn uniform(spec: ApproximationSpec, num_users: usize, num_tones: usize) -> Self {
        MethodAssignment {
            num_users,
            num_tones,
            specs: vec![spec; num_users * num_tones],
        }
    }

    /// Per-user specs applied on every tone.
    pub fn per_user(specs: &[ApproximationSpec], num_tones: usize) -> Self {
        let num_users = specs.len();
        let mut all = Vec::with_capacity(num_users * num_tones);
        for _ in 0..num_tones {
            all.extend_from_slice(specs);
        }
        MethodAssignment {
            num_users,
            num_tones,
            specs: all,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_tones(&self) -> usize {
        self.num_tones
    }

    #[inline]
    pub fn get(&self, k: usize, n: usize) -> &ApproximationSpec {
        &self.specs[k * self.num_users + n]
    }

    pub fn set(&mut self, k: usize, n: usize, spec: ApproximationSpec) {
        self.specs[k * self.num_users + n] = spec;
    }

    /// Number of pairs using `kind`.
    pub fn count_kind(&self, kind: MethodKind) -> usize {
        self.specs.iter().filter(|s| s.kind == kind).count()
    }

    /// The single kind used everywhere, if the assignment is uniform in kind.
    pub fn uniform_kind(&self) -> Option<MethodKind> {
        let first = self.specs.first()?.kind;
        self.specs.iter().all(|s| s.kind == first).then_some(first)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Range {
    All,
    Span(usize, usize),
}

impl Range {
    fn contains(&self, i: usize) -> bool {
        match *self {
            Range::All => true,
            Range::Span(a, b) => i >= a && i <= b,
        }
    }
}

fn parse_index(rule: &str, what: &str, s: &str, limit: usize) -> Result<usize> {
    let i: usize = s.trim().parse().map_err(|_| Error::InvalidRule {
        rule: rule.to_string(),
        reason: format!("bad {what} index `{s}`"),
    })?;
    if i == 0 || i > limit {
        return Err(Error::InvalidRule {
            rule: rule.to_string(),
            reason: format!("unknown {what} {i} (valid: 1..={limit})"),
        });
    }
    Ok(i - 1)
}

/// Parses `5`, `2-4`, `<10`, `>=33` (1-based) into a 0-based inclusive span.
fn parse_range(rule: &str, what: &str, s: &str, limit: usize) -> Result<Range> {
    let bad = |reason: String| Error::InvalidRule {
        rule: rule.to_string(),
        reason,
    };
    if let Some(rest) = s.strip_prefix(">=") {
        return Ok(Range::Span(parse_index(rule, what, rest, limit)?, limit - 1));
    }
    if let Some(rest) = s.strip_prefix("<=") {
        return Ok(Range::Span(0, parse_index(rule, what, rest, limit)?));
    }
    if let Some(rest) = s.strip_prefix('>') {
        let i = parse_index(rule, what, rest, limit)?;
        if i + 1 >= limit {
            return Err(bad(format!("empty {what} range `{s}`")));
        }
        return Ok(Range::Span(i + 1, limit - 1));
    }
    if let Some(rest) = s.strip_prefix('<') {
        let i = parse_index(rule, what, rest, limit)?;
        if i == 0 {
            return Err(bad(format!("empty {what} range `{s}`")));
        }
        return Ok(Range::Span(0, i - 1));
    }
    if let Some((a, b)) = s.split_once('-') {
        let (a, b) = (
            parse_index(rule, what, a, limit)?,
            parse_index(rule, what, b, limit)?,
        );
        if a > b {
            return Err(bad(format!("empty {what} range `{s}`")));
        }
        return Ok(Range::Span(a, b));
    }
    let i = parse_index(rule, what, s, limit)?;
    Ok(Range::Span(i, i))
}

/// Builds a method assignment from a rule such as `all:iasb1`,
/// `user2:iasb3,rest:iasb1` or `tones>=33:iasb5,rest:iasb1`.
///
/// Clauses are `selector:method`, separated by commas and applied in order.
/// A selector is `all`, `rest` (pairs not set by any other clause),
/// `user<R>`, `tones<R>`, or `user<R>@tones<R>`, where `<R>` is a 1-based
/// index, an inclusive range `a-b`, or a comparison (`<`, `<=`, `>`, `>=`).
/// Reference users and θ are copied from `base`.
pub fn allocate_hybrid(
    rule: &str,
    num_users: usize,
    num_tones: usize,
    base: ApproximationSpec,
) -> Result<MethodAssignment> {
    let bad = |reason: String| Error::InvalidRule {
        rule: rule.to_string(),
        reason,
    };
    let mut slots: Vec<Option<ApproximationSpec>> = vec![None; num_users * num_tones];
    let mut rest: Option<ApproximationSpec> = None;
    for clause in rule.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        let (selector, method) = clause
            .split_once(':')
            .ok_or_else(|| bad(format!("clause `{clause}` lacks `:method`")))?;
        let kind: MethodKind = method.trim().parse()?;
        let spec = ApproximationSpec { kind, ..base };
        let selector = selector.trim().to_ascii_lowercase();
        if selector == "rest" {
            if rest.is_some() {
                return Err(bad("`rest` given twice".to_string()));
            }
            rest = Some(spec);
            continue;
        }
        let (mut users, mut tones) = (Range::All, Range::All);
        if selector != "all" {
            for part in selector.split('@') {
                if let Some(r) = part.strip_prefix("tones").or_else(|| part.strip_prefix("tone")) {
                    tones = parse_range(rule, "tone", r, num_tones)?;
                } else if let Some(r) = part.strip_prefix("users").or_else(|| part.strip_prefix("user")) {
                    users = parse_range(rule, "user", r, num_users)?;
                } else {
                    return Err(bad(format!("unknown selector `{part}`")));
                }
            }
        }
        for k in 0..num_tones {
            for n in 0..num_users {
                if tones.contains(k) && users.contains(n) {
                    slots[k * num_users + n] = Some(spec);
                }
            }
        }
    }
    let mut specs = Vec::with_capacity(slots.len());
    for (i, slot) in slots.into_iter().enumerate() {
        match slot.or(rest) {
            Some(s) => specs.push(s),
            None => {
                return Err(bad(format!(
                    "no method for user {} on tone {}",
                    i % num_users + 1,
                    i / num_users + 1
                )))
            }
        }
    }
    Ok(MethodAssignment {
        num_users,
        num_tones,
        specs,
    })
}
