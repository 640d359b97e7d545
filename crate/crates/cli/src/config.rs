//! Spec-file formats: a TOML game description (built-in model shortcut or
//! explicit quadratic coefficients) and a TOML dominance-comparison input
//! holding two (choice belief, density) pairs.

use std::collections::BTreeMap;

use pointrat::beliefs::{BeliefFamily, ChoiceBelief, PiecewiseConstantDensity};
use pointrat::game::{
    bertrand_game, cournot_game, CoeffForm, GameSpec, Mode, PlayerSpec, QuadraticUtility,
    ThetaAffine, UtilitySpec,
};
use pointrat::{Error, Interval, Result};
use serde::Deserialize;

/// A numeric literal: a plain TOML number, or a string holding a decimal or
/// a rational like `"2/3"` for values with no exact float literal.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Num {
    pub fn value(&self) -> Result<f64> {
        match self {
            Num::Float(x) => Ok(*x),
            Num::Int(i) => Ok(*i as f64),
            Num::Text(s) => parse_rational(s),
        }
    }
}

fn parse_rational(s: &str) -> Result<f64> {
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Argument(format!("cannot parse number {t:?}")))
    };
    match s.split_once('/') {
        Some((num, den)) => {
            let d = parse(den)?;
            if d == 0.0 {
                return Err(Error::Argument(format!("zero denominator in {s:?}")));
            }
            Ok(parse(num)? / d)
        }
        None => parse(s),
    }
}

fn values(nums: &[Num]) -> Result<Vec<f64>> {
    nums.iter().map(Num::value).collect()
}

fn interval(pair: &[Num; 2], what: &str) -> Result<Interval> {
    Interval::new(pair[0].value()?, pair[1].value()?).map_err(|e| match e {
        Error::Argument(msg) => Error::Argument(format!("{what}: {msg}")),
        other => other,
    })
}

fn theta_affine(pair: &[Num; 2]) -> Result<ThetaAffine> {
    Ok(ThetaAffine::new(pair[0].value()?, pair[1].value()?))
}

/// Top-level game spec file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub game: GameSection,
    #[serde(default)]
    pub players: BTreeMap<String, PlayerSection>,
    #[serde(default)]
    pub beliefs: BTreeMap<String, BeliefSection>,
}

/// `[game]`: either `model` (built-in) with its parameters, or just `mode`
/// with the players/beliefs sections spelled out. `mode` alongside `model`
/// overrides the built-in label, which is how a deliberately mislabeled
/// game is fed to the assumption checker.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub mode: Option<String>,
    pub model: Option<String>,
    pub a: Option<Num>,
    pub phi: Option<Num>,
    pub p_bar: Option<Num>,
    pub c: Option<Num>,
    pub phi_lo: Option<Num>,
    pub phi_hi: Option<Num>,
    pub q_bar: Option<Num>,
}

/// `[players.N]`: intervals plus quadratic coefficients. Each coefficient
/// is `[constant, theta-slope]`; `*_opponent` lists one such pair per
/// opponent and defaults to zeros.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSection {
    pub choice: [Num; 2],
    pub parameter: [Num; 2],
    pub a_base: [Num; 2],
    #[serde(default)]
    pub a_opponent: Vec<[Num; 2]>,
    pub b_base: [Num; 2],
    #[serde(default)]
    pub b_opponent: Vec<[Num; 2]>,
    #[serde(default)]
    pub d_base: Option<[Num; 2]>,
    #[serde(default)]
    pub d_opponent: Vec<[Num; 2]>,
}

/// `[beliefs.N]`: one family (single-opponent shorthand) or an explicit
/// `family` array with one entry per opponent slot.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum BeliefSection {
    Multi { family: Vec<FamilyConfig> },
    Single(FamilyConfig),
}

impl BeliefSection {
    fn families(&self) -> Vec<&FamilyConfig> {
        match self {
            BeliefSection::Multi { family } => family.iter().collect(),
            BeliefSection::Single(f) => vec![f],
        }
    }
}

/// One belief family: shared breakpoints, one density height row per
/// member, and the indices of the designated extreme members.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub breakpoints: Vec<Num>,
    pub members: Vec<Vec<Num>>,
    pub max_index: usize,
    pub min_index: usize,
}

impl FamilyConfig {
    fn build(&self) -> Result<BeliefFamily> {
        let bps = values(&self.breakpoints)?;
        let members = self
            .members
            .iter()
            .map(|row| PiecewiseConstantDensity::new(bps.clone(), values(row)?))
            .collect::<Result<Vec<_>>>()?;
        BeliefFamily::new(members, self.max_index, self.min_index)
    }
}

fn parse_mode(s: &str) -> Result<Mode> {
    match s.to_ascii_lowercase().as_str() {
        "complements" => Ok(Mode::Complements),
        "substitutes" => Ok(Mode::Substitutes),
        other => Err(Error::Argument(format!(
            "mode must be \"complements\" or \"substitutes\", got {other:?}"
        ))),
    }
}

impl SpecFile {
    pub fn to_game(&self) -> Result<GameSpec> {
        match &self.game.model {
            Some(model) => self.builtin_game(model),
            None => self.custom_game(),
        }
    }

    fn builtin_game(&self, model: &str) -> Result<GameSpec> {
        if !self.players.is_empty() || !self.beliefs.is_empty() {
            return Err(Error::Argument(
                "players/beliefs sections conflict with a built-in model".into(),
            ));
        }
        let need = |n: &Option<Num>, name: &str| {
            n.as_ref()
                .ok_or_else(|| Error::Argument(format!("model {model:?} needs parameter {name}")))
                .and_then(Num::value)
        };
        let g = match model.to_ascii_lowercase().as_str() {
            "bertrand" => bertrand_game(
                need(&self.game.a, "a")?,
                need(&self.game.phi, "phi")?,
                need(&self.game.p_bar, "p_bar")?,
            )?,
            "cournot" => cournot_game(
                need(&self.game.a, "a")?,
                need(&self.game.c, "c")?,
                need(&self.game.phi_lo, "phi_lo")?,
                need(&self.game.phi_hi, "phi_hi")?,
                need(&self.game.q_bar, "q_bar")?,
            )?,
            other => {
                return Err(Error::Argument(format!(
                    "unknown model {other:?}; expected \"bertrand\" or \"cournot\""
                )))
            }
        };
        match &self.game.mode {
            Some(m) => {
                let mode = parse_mode(m)?;
                GameSpec::new(mode, g.players().to_vec())
            }
            None => Ok(g),
        }
    }

    fn custom_game(&self) -> Result<GameSpec> {
        let mode = parse_mode(
            self.game
                .mode
                .as_deref()
                .ok_or_else(|| Error::Argument("custom games need [game] mode".into()))?,
        )?;
        let n = self.players.len();
        if n < 2 {
            return Err(Error::Argument(format!(
                "custom games need at least two [players.N] sections, got {n}"
            )));
        }
        let mut players = Vec::with_capacity(n);
        for idx in 1..=n {
            let key = idx.to_string();
            let p = self.players.get(&key).ok_or_else(|| {
                Error::Argument(format!("missing [players.{key}] (sections must be 1..={n})"))
            })?;
            let b = self.beliefs.get(&key).ok_or_else(|| {
                Error::Argument(format!("missing [beliefs.{key}] for player {key}"))
            })?;
            let families = b
                .families()
                .iter()
                .map(|f| f.build())
                .collect::<Result<Vec<_>>>()?;
            players.push(PlayerSpec {
                choice: interval(&p.choice, &format!("players.{key} choice"))?,
                parameter: interval(&p.parameter, &format!("players.{key} parameter"))?,
                utility: UtilitySpec::Quadratic(QuadraticUtility {
                    a: coeff(&p.a_base, &p.a_opponent, n)?,
                    b: coeff(&p.b_base, &p.b_opponent, n)?,
                    d: coeff(
                        p.d_base.as_ref().unwrap_or(&[Num::Int(0), Num::Int(0)]),
                        &p.d_opponent,
                        n,
                    )?,
                }),
                families,
            });
        }
        for key in self.players.keys().chain(self.beliefs.keys()) {
            match key.parse::<usize>() {
                Ok(i) if (1..=n).contains(&i) => {}
                _ => {
                    return Err(Error::Argument(format!(
                        "player section keys must be 1..={n}, got {key:?}"
                    )))
                }
            }
        }
        GameSpec::new(mode, players)
    }
}

fn coeff(base: &[Num; 2], per_opponent: &[[Num; 2]], n: usize) -> Result<CoeffForm> {
    let per_opponent = if per_opponent.is_empty() {
        vec![ThetaAffine::new(0.0, 0.0); n - 1]
    } else if per_opponent.len() == n - 1 {
        per_opponent
            .iter()
            .map(theta_affine)
            .collect::<Result<Vec<_>>>()?
    } else {
        return Err(Error::Argument(format!(
            "coefficient needs {} opponent entries, got {}",
            n - 1,
            per_opponent.len()
        )));
    };
    Ok(CoeffForm { base: theta_affine(base)?, per_opponent })
}

/// Dominance-comparison input: two (choice belief, density) pairs.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominanceFile {
    pub first: PairSection,
    pub second: PairSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSection {
    pub density: DensityConfig,
    pub belief: BeliefConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub breakpoints: Vec<Num>,
    pub values: Vec<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefConfig {
    pub breakpoints: Vec<Num>,
    pub values: Vec<Num>,
    pub choice: [Num; 2],
}

impl PairSection {
    pub fn build(&self) -> Result<(ChoiceBelief, PiecewiseConstantDensity)> {
        let density = PiecewiseConstantDensity::new(
            values(&self.density.breakpoints)?,
            values(&self.density.values)?,
        )?;
        let belief = ChoiceBelief::from_steps(
            &values(&self.belief.breakpoints)?,
            &values(&self.belief.values)?,
            interval(&self.belief.choice, "belief choice interval")?,
        )?;
        Ok((belief, density))
    }
}
