//! Two-dimensional spatial relation algebra.
//!
//! Directions are unit displacements on an integer grid with `x` growing to
//! the right and `y` growing upward, so `top` is `(0, 1)`. A
//! [`RelationTriple`] `(head, rel, tail)` asserts
//! `pos(head) = pos(tail) + offset(rel)`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the eight relative directions between two entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Top,
    Down,
    Left,
    Right,
    TopLeft,
    TopRight,
    DownLeft,
    DownRight,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::Top,
        Direction::Down,
        Direction::Left,
        Direction::Right,
        Direction::TopLeft,
        Direction::TopRight,
        Direction::DownLeft,
        Direction::DownRight,
    ];

    pub fn offset(self) -> Coord {
        let (x, y) = match self {
            Direction::Top => (0, 1),
            Direction::Down => (0, -1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
            Direction::TopLeft => (-1, 1),
            Direction::TopRight => (1, 1),
            Direction::DownLeft => (-1, -1),
            Direction::DownRight => (1, -1),
        };
        Coord::new(x, y)
    }

    pub fn inverse(self) -> Direction {
        match self {
            Direction::Top => Direction::Down,
            Direction::Down => Direction::Top,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::TopLeft => Direction::DownRight,
            Direction::TopRight => Direction::DownLeft,
            Direction::DownLeft => Direction::TopRight,
            Direction::DownRight => Direction::TopLeft,
        }
    }

    /// The direction whose unit offset is exactly `c`, if any.
    pub fn from_offset(c: Coord) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.offset() == c)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Top => "top",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::TopLeft => "top-left",
            Direction::TopRight => "top-right",
            Direction::DownLeft => "down-left",
            Direction::DownRight => "down-right",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for Direction {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Direction::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// The nine answer classes: the eight directions plus `overlap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerLabel {
    Overlap,
    Top,
    Down,
    Left,
    Right,
    TopLeft,
    TopRight,
    DownLeft,
    DownRight,
}

impl AnswerLabel {
    pub const ALL: [AnswerLabel; 9] = [
        AnswerLabel::Overlap,
        AnswerLabel::Top,
        AnswerLabel::Down,
        AnswerLabel::Left,
        AnswerLabel::Right,
        AnswerLabel::TopLeft,
        AnswerLabel::TopRight,
        AnswerLabel::DownLeft,
        AnswerLabel::DownRight,
    ];

    pub fn direction(self) -> Option<Direction> {
        match self {
            AnswerLabel::Overlap => None,
            AnswerLabel::Top => Some(Direction::Top),
            AnswerLabel::Down => Some(Direction::Down),
            AnswerLabel::Left => Some(Direction::Left),
            AnswerLabel::Right => Some(Direction::Right),
            AnswerLabel::TopLeft => Some(Direction::TopLeft),
            AnswerLabel::TopRight => Some(Direction::TopRight),
            AnswerLabel::DownLeft => Some(Direction::DownLeft),
            AnswerLabel::DownRight => Some(Direction::DownRight),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self.direction() {
            Some(d) => d.as_str(),
            None => "overlap",
        }
    }
}

impl From<Direction> for AnswerLabel {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Top => AnswerLabel::Top,
            Direction::Down => AnswerLabel::Down,
            Direction::Left => AnswerLabel::Left,
            Direction::Right => AnswerLabel::Right,
            Direction::TopLeft => AnswerLabel::TopLeft,
            Direction::TopRight => AnswerLabel::TopRight,
            Direction::DownLeft => AnswerLabel::DownLeft,
            Direction::DownRight => AnswerLabel::DownRight,
        }
    }
}

impl fmt::Display for AnswerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnswerLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnswerLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Integer grid position or displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Coord {
    pub x: i64,
    pub y: i64,
}

impl Coord {
    pub const ORIGIN: Coord = Coord { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Coord { x, y }
    }

    /// Chebyshev norm, `max(|x|, |y|)`.
    pub fn chebyshev(self) -> i64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Add for Coord {
    type Output = Coord;
    fn add(self, o: Coord) -> Coord {
        Coord::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Coord {
    type Output = Coord;
    fn sub(self, o: Coord) -> Coord {
        Coord::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Coord {
    type Output = Coord;
    fn neg(self) -> Coord {
        Coord::new(-self.x, -self.y)
    }
}

/// Maps a displacement to its answer class by the signs of its components.
pub fn label_displacement(d: Coord) -> AnswerLabel {
    let sign = Coord::new(d.x.signum(), d.y.signum());
    match Direction::from_offset(sign) {
        Some(dir) => dir.into(),
        None => AnswerLabel::Overlap,
    }
}

/// A named entity. Entities render verbatim into sentences, so names are
/// restricted to ASCII alphanumerics and `_` (see [`is_entity_token`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Entity(String);

impl Entity {
    pub fn new(name: impl Into<String>) -> Self {
        Entity(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Entity {
    fn from(s: &str) -> Self {
        Entity(s.to_string())
    }
}

pub fn is_entity_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn is_entity_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_entity_char)
}

/// `pos(head) = pos(tail) + offset(rel)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationTriple {
    pub head: Entity,
    pub rel: Direction,
    pub tail: Entity,
}

impl RelationTriple {
    pub fn new(head: impl Into<Entity>, rel: Direction, tail: impl Into<Entity>) -> Self {
        RelationTriple { head: head.into(), rel, tail: tail.into() }
    }

    /// The same fact stated from the other entity's point of view.
    pub fn invert(&self) -> RelationTriple {
        RelationTriple { head: self.tail.clone(), rel: self.rel.inverse(), tail: self.head.clone() }
    }

    pub fn touches(&self, e: &Entity) -> bool {
        &self.head == e || &self.tail == e
    }
}

impl fmt::Display for RelationTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.head, self.rel, self.tail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TripleParseError {
    #[error("expected `(head,rel,tail)`, got `{0}`")]
    Shape(String),
    #[error("invalid entity name `{0}`")]
    Entity(String),
    #[error(transparent)]
    Relation(#[from] UnknownLabel),
}

/// Parses the compact `(head,rel,tail)` notation used by `Display`.
impl FromStr for RelationTriple {
    type Err = TripleParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| TripleParseError::Shape(s.to_string()))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let [head, rel, tail] = parts[..] else {
            return Err(TripleParseError::Shape(s.to_string()));
        };
        for e in [head, tail] {
            if !is_entity_token(e) {
                return Err(TripleParseError::Entity(e.to_string()));
            }
        }
        Ok(RelationTriple::new(head, rel.parse()?, tail))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlacementError {
    #[error("inconsistent relations: {entity} placed at ({}, {}) and ({}, {})", first.x, first.y, second.x, second.y)]
    InconsistentChain { entity: Entity, first: Coord, second: Coord },
    #[error("entity {0} is not connected to the anchor")]
    DisconnectedEntity(Entity),
    #[error("triple {0} relates an entity to itself")]
    SelfLoop(RelationTriple),
}

/// Assigns every entity mentioned in `relations` a coordinate, with `anchor`
/// at the origin. Fails if two paths disagree or if an entity cannot be
/// reached from the anchor.
pub fn place_chain(
    relations: &[RelationTriple],
    anchor: &Entity,
) -> Result<BTreeMap<Entity, Coord>, PlacementError> {
    let coords = place_component(relations, anchor)?;
    for t in relations {
        for e in [&t.head, &t.tail] {
            if !coords.contains_key(e) {
                return Err(PlacementError::DisconnectedEntity(e.clone()));
            }
        }
    }
    Ok(coords)
}

/// Like [`place_chain`] but only places the connected component containing
/// `anchor`, ignoring everything else.
pub fn place_component(
    relations: &[RelationTriple],
    anchor: &Entity,
) -> Result<BTreeMap<Entity, Coord>, PlacementError> {
    // adjacency: entity -> [(neighbour, offset of neighbour relative to entity)]
    let mut adj: HashMap<&Entity, Vec<(&Entity, Coord)>> = HashMap::new();
    for t in relations {
        if t.head == t.tail {
            return Err(PlacementError::SelfLoop(t.clone()));
        }
        let off = t.rel.offset();
        adj.entry(&t.tail).or_default().push((&t.head, off));
        adj.entry(&t.head).or_default().push((&t.tail, -off));
    }

    let mut coords = BTreeMap::new();
    coords.insert(anchor.clone(), Coord::ORIGIN);
    let mut queue = VecDeque::from([anchor]);
    while let Some(cur) = queue.pop_front() {
        let here = coords[cur];
        for &(next, off) in adj.get(cur).map(Vec::as_slice).unwrap_or(&[]) {
            let there = here + off;
            match coords.get(next) {
                Some(&seen) if seen != there => {
                    return Err(PlacementError::InconsistentChain {
                        entity: next.clone(),
                        first: seen,
                        second: there,
                    });
                }
                Some(_) => {}
                None => {
                    coords.insert(next.clone(), there);
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: &str, r: Direction, tl: &str) -> RelationTriple {
        RelationTriple::new(h, r, tl)
    }

    #[test]
    fn offsets() {
        assert_eq!(Direction::Top.offset(), Coord::new(0, 1));
        assert_eq!(Direction::DownLeft.offset(), Coord::new(-1, -1));
        assert_eq!(Direction::TopRight.offset(), Coord::new(1, 1));
        for d in Direction::ALL {
            assert_eq!(d.offset() + d.inverse().offset(), Coord::ORIGIN);
            assert_eq!(d.inverse().inverse(), d);
            assert!(d.offset() != Coord::ORIGIN && d.offset().chebyshev() == 1);
        }
        let mut seen: Vec<_> = Direction::ALL.iter().map(|d| d.offset()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn invert_examples() {
        assert_eq!(t("A", Direction::Left, "B").invert(), t("B", Direction::Right, "A"));
        assert_eq!(t("X", Direction::TopRight, "Y").invert(), t("Y", Direction::DownLeft, "X"));
        for d in Direction::ALL {
            let tr = t("P", d, "Q");
            assert_eq!(tr.invert().invert(), tr);
        }
    }

    #[test]
    fn labels() {
        assert_eq!(label_displacement(Coord::new(0, 0)), AnswerLabel::Overlap);
        assert_eq!(label_displacement(Coord::new(3, -1)), AnswerLabel::DownRight);
        assert_eq!(label_displacement(Coord::new(-2, 0)), AnswerLabel::Left);
        for d in Direction::ALL {
            assert_eq!(label_displacement(d.offset()), AnswerLabel::from(d));
        }
        let mut all: Vec<_> = (-1..=1)
            .flat_map(|x| (-1..=1).map(move |y| label_displacement(Coord::new(x, y))))
            .collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 9);
    }

    #[test]
    fn label_string_round_trip() {
        for l in AnswerLabel::ALL {
            assert_eq!(l.as_str().parse::<AnswerLabel>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{}\"", l.as_str()));
        }
        assert!("up".parse::<Direction>().is_err());
    }

    #[test]
    fn triple_notation() {
        let tr: RelationTriple = "(B, right, A)".parse().unwrap();
        assert_eq!(tr, t("B", Direction::Right, "A"));
        assert_eq!(tr.to_string().parse::<RelationTriple>().unwrap(), tr);
        assert!("(B,right)".parse::<RelationTriple>().is_err());
        assert!("(B b,right,A)".parse::<RelationTriple>().is_err());
    }

    #[test]
    fn place_examples() {
        let a = Entity::from("A");
        let p = place_chain(&[t("B", Direction::Right, "A"), t("C", Direction::Top, "B")], &a).unwrap();
        assert_eq!(p[&a], Coord::new(0, 0));
        assert_eq!(p[&"B".into()], Coord::new(1, 0));
        assert_eq!(p[&"C".into()], Coord::new(1, 1));

        let p = place_chain(&[t("B", Direction::Right, "A"), t("C", Direction::Left, "B")], &a).unwrap();
        assert_eq!(p[&"C".into()], Coord::new(0, 0));

        let p = place_chain(&[], &a).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[&a], Coord::ORIGIN);
    }

    #[test]
    fn place_errors() {
        let a = Entity::from("A");
        let err = place_chain(
            &[t("B", Direction::Right, "A"), t("C", Direction::Top, "B"), t("C", Direction::Top, "A")],
            &a,
        )
        .unwrap_err();
        assert!(matches!(err, PlacementError::InconsistentChain { .. }));

        let err = place_chain(&[t("B", Direction::Right, "A"), t("D", Direction::Top, "C")], &a).unwrap_err();
        assert!(matches!(err, PlacementError::DisconnectedEntity(_)));

        // component placement ignores the unreachable part
        let p = place_component(&[t("B", Direction::Right, "A"), t("D", Direction::Top, "C")], &a).unwrap();
        assert_eq!(p.len(), 2);

        let err = place_chain(&[t("A", Direction::Top, "A")], &a).unwrap_err();
        assert!(matches!(err, PlacementError::SelfLoop(_)));
    }

    #[test]
    fn large_coordinates_are_exact() {
        let big = Coord::new(1_000_000, -1_000_000);
        assert_eq!(label_displacement(big - (-big)), AnswerLabel::DownRight);

        let n = 100_000usize;
        let names: Vec<String> = (0..=n).map(|i| format!("e{i}")).collect();
        let chain: Vec<_> = (0..n)
            .map(|i| RelationTriple::new(names[i + 1].as_str(), Direction::TopRight, names[i].as_str()))
            .collect();
        let p = place_chain(&chain, &Entity::from("e0")).unwrap();
        assert_eq!(p[&Entity::new(names[n].clone())], Coord::new(n as i64, n as i64));
    }
}
