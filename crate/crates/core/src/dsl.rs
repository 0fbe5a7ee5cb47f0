//! The `.econ` text format.
//!
//! ```text
//! # comment
//! periods: 2
//! agent a1 side A arrives 1 delta 1/2
//! agent b1 side B arrives 1 delta 9/10
//! prefs a1: b1=3
//! prefs b1: a1=2
//! ordinal a1: (b1,0) (b1,1)
//! ```
//!
//! Numbers are integers or `p/q` fractions; decimals are rejected. Partners
//! missing from an agent's `prefs` line are worth `-1` to it. `ordinal`
//! lines are claims about the ranking of discounted utilities, checked by
//! [`validate_ordinal`] but never used to fill in utilities.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::economy::{Economy, Rational, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    SyntaxError,
    DuplicateAgent,
    UnknownPartner,
    BadRational,
    ArrivalOutOfRange,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A diagnostic with a 1-based position.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{kind} at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentDecl {
    pub name: String,
    pub side: Side,
    pub arrives: usize,
    pub delta: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefLine {
    pub owner: String,
    pub entries: Vec<(String, Rational)>,
}

/// Partners with delays, listed from most to least preferred.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrdinalBlock {
    pub owner: String,
    pub entries: Vec<(String, usize)>,
}

/// Parsed `.econ` file, keeping only what was written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EconomyDocument {
    pub periods: usize,
    pub agents: Vec<AgentDecl>,
    pub prefs: Vec<PrefLine>,
    pub ordinals: Vec<OrdinalBlock>,
}

struct Token<'a> {
    column: usize,
    text: &'a str,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let code = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in code.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token {
                    column: code[..s].chars().count() + 1,
                    text: &code[s..i],
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            column: code[..s].chars().count() + 1,
            text: &code[s..],
        });
    }
    out
}

struct Cursor {
    line: usize,
    end_column: usize,
}

impl Cursor {
    fn err(&self, kind: ParseErrorKind, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            kind,
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn at<'a>(&self, toks: &'a [Token<'a>], i: usize, what: &str) -> Result<&'a Token<'a>, ParseError> {
        toks.get(i)
            .ok_or_else(|| self.err(ParseErrorKind::SyntaxError, self.end_column, format!("expected {what}")))
    }

    fn keyword(&self, toks: &[Token<'_>], i: usize, word: &str) -> Result<(), ParseError> {
        let tok = self.at(toks, i, &format!("`{word}`"))?;
        if tok.text != word {
            return Err(self.err(
                ParseErrorKind::SyntaxError,
                tok.column,
                format!("expected `{word}`, found `{}`", tok.text),
            ));
        }
        Ok(())
    }

    fn name(&self, tok: &Token<'_>) -> Result<String, ParseError> {
        if tok.text.is_empty() || !tok.text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(self.err(
                ParseErrorKind::SyntaxError,
                tok.column,
                format!("bad agent name `{}`", tok.text),
            ));
        }
        Ok(tok.text.to_string())
    }

    fn integer(&self, tok: &Token<'_>, what: &str) -> Result<usize, ParseError> {
        if !tok.text.chars().all(|c| c.is_ascii_digit()) {
            return Err(self.err(
                ParseErrorKind::SyntaxError,
                tok.column,
                format!("expected {what}, found `{}`", tok.text),
            ));
        }
        tok.text.parse().map_err(|_| {
            self.err(
                ParseErrorKind::SyntaxError,
                tok.column,
                format!("expected {what}, found `{}`", tok.text),
            )
        })
    }

    fn rational(&self, text: &str, column: usize) -> Result<Rational, ParseError> {
        parse_rational(text).ok_or_else(|| {
            self.err(
                ParseErrorKind::BadRational,
                column,
                format!("`{text}` is not an integer or p/q fraction"),
            )
        })
    }
}

/// Parses `-p/q` or `-n`; returns `None` for anything else, including decimals.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let digits = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) if digits(n) && digits(d) => (n, d),
        None if digits(body) => (body, "1"),
        _ => return None,
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    let r = Rational::new(num, den);
    Some(if neg { -r } else { r })
}

/// Where each referenced name appears, for late semantic checks.
struct Reference {
    line: usize,
    column: usize,
    owner: String,
    partner: Option<String>,
}

/// Parses a document and checks every name and range in it.
pub fn parse_document(text: &str) -> Result<EconomyDocument, ParseError> {
    let mut periods: Option<usize> = None;
    let mut agents: Vec<AgentDecl> = Vec::new();
    let mut prefs = Vec::new();
    let mut ordinals = Vec::new();
    let mut refs: Vec<Reference> = Vec::new();
    let mut seen_names: HashMap<String, usize> = HashMap::new();
    let mut pref_owners = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let cur = Cursor {
            line: idx + 1,
            end_column: raw.chars().count() + 1,
        };
        let toks = tokens(raw);
        let Some(first) = toks.first() else { continue };
        match first.text {
            "periods:" => {
                if periods.is_some() {
                    return Err(cur.err(ParseErrorKind::SyntaxError, first.column, "duplicate `periods:` header"));
                }
                let tok = cur.at(&toks, 1, "number of periods")?;
                let t = cur.integer(tok, "number of periods")?;
                if t == 0 {
                    return Err(cur.err(ParseErrorKind::SyntaxError, tok.column, "periods must be at least 1"));
                }
                if let Some(extra) = toks.get(2) {
                    return Err(cur.err(ParseErrorKind::SyntaxError, extra.column, "trailing input"));
                }
                periods = Some(t);
            }
            "agent" => {
                let Some(horizon) = periods else {
                    return Err(cur.err(
                        ParseErrorKind::SyntaxError,
                        first.column,
                        "`periods:` must precede agents",
                    ));
                };
                let name_tok = cur.at(&toks, 1, "agent name")?;
                let name = cur.name(name_tok)?;
                cur.keyword(&toks, 2, "side")?;
                let side_tok = cur.at(&toks, 3, "`A` or `B`")?;
                let side = match side_tok.text {
                    "A" => Side::A,
                    "B" => Side::B,
                    other => {
                        return Err(cur.err(
                            ParseErrorKind::SyntaxError,
                            side_tok.column,
                            format!("expected `A` or `B`, found `{other}`"),
                        ))
                    }
                };
                cur.keyword(&toks, 4, "arrives")?;
                let arr_tok = cur.at(&toks, 5, "arrival period")?;
                let arrives = cur.integer(arr_tok, "arrival period")?;
                if arrives == 0 || arrives > horizon {
                    return Err(cur.err(
                        ParseErrorKind::ArrivalOutOfRange,
                        arr_tok.column,
                        format!("arrival {arrives} outside 1..={horizon}"),
                    ));
                }
                cur.keyword(&toks, 6, "delta")?;
                let d_tok = cur.at(&toks, 7, "discount factor")?;
                let delta = cur.rational(d_tok.text, d_tok.column)?;
                if delta.is_negative() || delta > Rational::one() {
                    return Err(cur.err(
                        ParseErrorKind::BadRational,
                        d_tok.column,
                        "discount factor outside [0, 1]",
                    ));
                }
                if let Some(extra) = toks.get(8) {
                    return Err(cur.err(ParseErrorKind::SyntaxError, extra.column, "trailing input"));
                }
                if seen_names.insert(name.clone(), agents.len()).is_some() {
                    return Err(cur.err(
                        ParseErrorKind::DuplicateAgent,
                        name_tok.column,
                        format!("agent `{name}` declared twice"),
                    ));
                }
                agents.push(AgentDecl {
                    name,
                    side,
                    arrives,
                    delta,
                });
            }
            "prefs" | "ordinal" => {
                let ordinal = first.text == "ordinal";
                let owner_tok = cur.at(&toks, 1, "`<name>:`")?;
                let Some(owner) = owner_tok.text.strip_suffix(':') else {
                    return Err(cur.err(ParseErrorKind::SyntaxError, owner_tok.column, "expected `<name>:`"));
                };
                let owner = cur.name(&Token {
                    column: owner_tok.column,
                    text: owner,
                })?;
                refs.push(Reference {
                    line: cur.line,
                    column: owner_tok.column,
                    owner: owner.clone(),
                    partner: None,
                });
                let mut partners = HashSet::new();
                if ordinal {
                    let mut entries = Vec::new();
                    for tok in &toks[2..] {
                        let inner = tok
                            .text
                            .strip_prefix('(')
                            .and_then(|s| s.strip_suffix(')'))
                            .and_then(|s| s.split_once(','))
                            .ok_or_else(|| {
                                cur.err(
                                    ParseErrorKind::SyntaxError,
                                    tok.column,
                                    format!("expected `(<partner>,<delay>)`, found `{}`", tok.text),
                                )
                            })?;
                        let partner = cur.name(&Token {
                            column: tok.column + 1,
                            text: inner.0,
                        })?;
                        let delay = cur.integer(
                            &Token {
                                column: tok.column,
                                text: inner.1,
                            },
                            "delay",
                        )?;
                        if periods.is_some_and(|t| delay >= t) {
                            return Err(cur.err(
                                ParseErrorKind::SyntaxError,
                                tok.column,
                                format!("delay {delay} is not below the horizon"),
                            ));
                        }
                        refs.push(Reference {
                            line: cur.line,
                            column: tok.column + 1,
                            owner: owner.clone(),
                            partner: Some(partner.clone()),
                        });
                        entries.push((partner, delay));
                    }
                    if entries.len() < 2 {
                        return Err(cur.err(
                            ParseErrorKind::SyntaxError,
                            cur.end_column,
                            "an ordinal line needs at least two entries",
                        ));
                    }
                    ordinals.push(OrdinalBlock { owner, entries });
                } else {
                    if !pref_owners.insert(owner.clone()) {
                        return Err(cur.err(
                            ParseErrorKind::SyntaxError,
                            owner_tok.column,
                            format!("second `prefs` line for `{owner}`"),
                        ));
                    }
                    let mut entries = Vec::new();
                    for tok in &toks[2..] {
                        let (partner, value) = tok.text.split_once('=').ok_or_else(|| {
                            cur.err(
                                ParseErrorKind::SyntaxError,
                                tok.column,
                                format!("expected `<partner>=<value>`, found `{}`", tok.text),
                            )
                        })?;
                        let partner = cur.name(&Token {
                            column: tok.column,
                            text: partner,
                        })?;
                        let value = cur.rational(value, tok.column + partner.len() + 1)?;
                        if !partners.insert(partner.clone()) {
                            return Err(cur.err(
                                ParseErrorKind::SyntaxError,
                                tok.column,
                                format!("`{partner}` listed twice"),
                            ));
                        }
                        refs.push(Reference {
                            line: cur.line,
                            column: tok.column,
                            owner: owner.clone(),
                            partner: Some(partner.clone()),
                        });
                        entries.push((partner, value));
                    }
                    prefs.push(PrefLine { owner, entries });
                }
            }
            other => {
                return Err(cur.err(
                    ParseErrorKind::SyntaxError,
                    first.column,
                    format!("unknown directive `{other}`"),
                ));
            }
        }
    }

    let Some(periods) = periods else {
        return Err(ParseError {
            kind: ParseErrorKind::SyntaxError,
            line: 1,
            column: 1,
            message: "missing `periods:` header".into(),
        });
    };
    for r in refs {
        let err = |message: String| ParseError {
            kind: ParseErrorKind::UnknownPartner,
            line: r.line,
            column: r.column,
            message,
        };
        let Some(&o) = seen_names.get(&r.owner) else {
            return Err(err(format!("unknown agent `{}`", r.owner)));
        };
        if let Some(p) = r.partner {
            match seen_names.get(&p) {
                None => return Err(err(format!("unknown partner `{p}`"))),
                Some(&j) if agents[j].side == agents[o].side => {
                    return Err(err(format!("`{p}` is on the same side as `{}`", r.owner)))
                }
                Some(_) => {}
            }
        }
    }
    Ok(EconomyDocument {
        periods,
        agents,
        prefs,
        ordinals,
    })
}

impl EconomyDocument {
    pub fn to_economy(&self) -> crate::error::Result<Economy> {
        let mut b = Economy::builder(self.periods);
        for a in &self.agents {
            b.add_agent(&a.name, a.side, a.arrives, a.delta.clone());
        }
        for line in &self.prefs {
            for (partner, value) in &line.entries {
                b.set_utility(&line.owner, partner, value.clone());
            }
        }
        b.build()
    }

    /// A document listing every utility that differs from the default `-1`.
    pub fn from_economy(econ: &Economy) -> Self {
        let agents = (0..econ.len())
            .map(|k| AgentDecl {
                name: econ.name(k).to_string(),
                side: econ.side(k),
                arrives: econ.arrival(k),
                delta: econ.delta(k).clone(),
            })
            .collect();
        let minus_one = -Rational::one();
        let prefs = (0..econ.len())
            .filter_map(|k| {
                let entries: Vec<(String, Rational)> = (0..econ.len())
                    .filter(|&j| econ.side(j) != econ.side(k) && *econ.utility(k, j) != minus_one)
                    .map(|j| (econ.name(j).to_string(), econ.utility(k, j).clone()))
                    .collect();
                (!entries.is_empty()).then(|| PrefLine {
                    owner: econ.name(k).to_string(),
                    entries,
                })
            })
            .collect();
        EconomyDocument {
            periods: econ.horizon(),
            agents,
            prefs,
            ordinals: Vec::new(),
        }
    }

    /// Canonical text: header, agents, preference lines, ordinal lines.
    pub fn serialize(&self) -> String {
        let mut out = format!("periods: {}\n", self.periods);
        for a in &self.agents {
            let _ = writeln!(
                out,
                "agent {} side {} arrives {} delta {}",
                a.name, a.side, a.arrives, a.delta
            );
        }
        for p in &self.prefs {
            let _ = write!(out, "prefs {}:", p.owner);
            for (partner, value) in &p.entries {
                let _ = write!(out, " {partner}={value}");
            }
            out.push('\n');
        }
        for o in &self.ordinals {
            let _ = write!(out, "ordinal {}:", o.owner);
            for (partner, delay) in &o.entries {
                let _ = write!(out, " ({partner},{delay})");
            }
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        Sha256::digest(self.serialize().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parses text straight into an economy plus its ordinal claims.
pub fn parse(text: &str) -> Result<(Economy, Vec<OrdinalBlock>), crate::error::Error> {
    let doc = parse_document(text)?;
    let econ = doc.to_economy()?;
    Ok((econ, doc.ordinals))
}

/// A listed ranking that the cardinal utilities do not support.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("`{owner}` ranks ({}, {}) = {} above ({}, {}) = {}", higher.0, higher.1, higher_value, lower.0, lower.1, lower_value)]
pub struct OrdinalViolation {
    pub owner: String,
    pub higher: (String, usize),
    pub lower: (String, usize),
    pub higher_value: Rational,
    pub lower_value: Rational,
}

/// Checks that each block lists strictly decreasing discounted utilities.
/// Returns the number of adjacent comparisons checked.
pub fn validate_ordinal(econ: &Economy, blocks: &[OrdinalBlock]) -> Result<usize, Box<OrdinalViolation>> {
    let mut checked = 0;
    for block in blocks {
        let owner = econ.index_of(&block.owner);
        let value = |(partner, delay): &(String, usize)| -> Rational {
            match (owner, econ.index_of(partner)) {
                (Some(k), Some(j)) => econ.delta(k).clone().pow(*delay as u32) * econ.utility(k, j),
                _ => Rational::zero(),
            }
        };
        for w in block.entries.windows(2) {
            let (hi, lo) = (value(&w[0]), value(&w[1]));
            checked += 1;
            if hi <= lo {
                return Err(Box::new(OrdinalViolation {
                    owner: block.owner.clone(),
                    higher: w[0].clone(),
                    lower: w[1].clone(),
                    higher_value: hi,
                    lower_value: lo,
                }));
            }
        }
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::{int, ratio};

    const MINIMAL: &str =
        "periods: 1\nagent a side A arrives 1 delta 1\nagent b side B arrives 1 delta 1/2\nprefs a: b=3\n";

    fn kind_of(text: &str) -> ParseErrorKind {
        parse_document(text).unwrap_err().kind
    }

    #[test]
    fn minimal_document() {
        let (econ, ordinals) = parse(MINIMAL).unwrap();
        assert_eq!(econ.len(), 2);
        assert_eq!(econ.utility(0, 1), &int(3));
        assert_eq!(econ.utility(1, 0), &int(-1));
        assert_eq!(econ.delta(1), &ratio(1, 2));
        assert!(ordinals.is_empty());
        assert_eq!(parse_document(MINIMAL).unwrap().serialize(), MINIMAL);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\n\nperiods: 1   # one period\nagent a side A arrives 1 delta 1\n";
        assert_eq!(parse_document(text).unwrap().agents.len(), 1);
    }

    #[test]
    fn error_kinds_and_positions() {
        let err = parse_document("periods: 1\nagent a side C arrives 1 delta 1\n").unwrap_err();
        assert_eq!((err.kind, err.line, err.column), (ParseErrorKind::SyntaxError, 2, 14));
        assert_eq!(
            kind_of("periods: 1\nagent a side A arrives 1 delta 1\nagent a side B arrives 1 delta 1\n"),
            ParseErrorKind::DuplicateAgent
        );
        assert_eq!(
            kind_of("periods: 1\nagent a side A arrives 1 delta 1\nprefs a: zz=1\n"),
            ParseErrorKind::UnknownPartner
        );
        assert_eq!(
            kind_of("periods: 1\nagent a side A arrives 1 delta 0.5\n"),
            ParseErrorKind::BadRational
        );
        assert_eq!(
            kind_of("periods: 1\nagent a side A arrives 1 delta 1/0\n"),
            ParseErrorKind::BadRational
        );
        assert_eq!(
            kind_of("periods: 1\nagent a side A arrives 2 delta 1\n"),
            ParseErrorKind::ArrivalOutOfRange
        );
        assert_eq!(
            kind_of("agent a side A arrives 1 delta 1\n"),
            ParseErrorKind::SyntaxError
        );
        assert_eq!(
            kind_of("periods: 1\nagent a side A arrives 1 delta 1\nagent c side A arrives 1 delta 1\nprefs a: c=1\n"),
            ParseErrorKind::UnknownPartner
        );
        let err = parse_document("periods: 1\nagent a side A arrives 1 delta 1\nprefs a: b=1.5\n").unwrap_err();
        assert_eq!((err.kind, err.column), (ParseErrorKind::BadRational, 12));
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("-3/6"), Some(ratio(-1, 2)));
        assert_eq!(parse_rational("7"), Some(int(7)));
        for bad in ["1.5", "1/", "/2", "--1", "", "1/-2", "+1"] {
            assert_eq!(parse_rational(bad), None, "{bad}");
        }
    }

    #[test]
    fn ordinal_checks() {
        let text = "periods: 2\nagent a3 side A arrives 1 delta 3/4\nagent b2 side B arrives 1 delta 1\nagent b3 side B arrives 1 delta 1\nprefs a3: b3=10 b2=8\nordinal a3: (b3,0) (b2,0) (b3,1)\n";
        let (econ, ordinals) = parse(text).unwrap();
        assert_eq!(validate_ordinal(&econ, &ordinals), Ok(2));
        let flat = text.replace("delta 3/4", "delta 1");
        let (econ, ordinals) = parse(&flat).unwrap();
        let err = validate_ordinal(&econ, &ordinals).unwrap_err();
        assert_eq!(err.higher, ("b2".to_string(), 0));
        assert_eq!(err.lower, ("b3".to_string(), 1));
    }

    #[test]
    fn unit_discount_cannot_rank_a_delay_strictly() {
        let text = "periods: 2\nagent a side A arrives 1 delta 1\nagent b side B arrives 1 delta 1\nprefs a: b=1\nordinal a: (b,0) (b,1)\n";
        let (econ, ordinals) = parse(text).unwrap();
        assert!(validate_ordinal(&econ, &ordinals).is_err());
    }

    #[test]
    fn economy_to_document_round_trip() {
        let (econ, _) = parse(MINIMAL).unwrap();
        let doc = EconomyDocument::from_economy(&econ);
        assert_eq!(doc.to_economy().unwrap(), econ);
        assert_eq!(doc.digest().len(), 64);
    }
}
