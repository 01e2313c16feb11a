//! Text lane-graph format.
//!
//! ```text
//! lanemap 1                 # header: magic word and format version
//! name two_lane             # optional map name
//! lane 1 {
//!   left 2                  # optional neighbor ids
//!   right 3
//!   successors 4 5          # zero or more ids
//!   drop                    # optional: lane ends, traffic must leave it
//!   center (0, 0) (100, 0)  # >= 2 points
//!   left_boundary (0, 1.75) (100, 1.75)    # optional
//!   right_boundary (0, -1.75) (100, -1.75) # optional
//! }
//! ```
//!
//! Whitespace and line breaks are insignificant; `#` starts a comment that
//! runs to the end of the line.

use std::fmt::Write as _;

use super::{Lane, LaneBuilder, MapError, RoadMap};
use crate::geometry::Point2;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "lanemap";

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(f64, String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, MapError> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (lno, col) = (li + 1, i + 1);
            let single = match c {
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                _ => None,
            };
            if let Some(tok) = single {
                out.push(Token {
                    tok,
                    line: lno,
                    col,
                });
                i += 1;
            } else if c == '#' {
                break;
            } else if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '-')
                {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Word(chars[start..i].iter().collect()),
                    line: lno,
                    col,
                });
            } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || "+-.".contains(chars[i]))
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text.parse().map_err(|_| MapError::Parse {
                    line: lno,
                    col,
                    msg: format!("invalid number '{text}'"),
                })?;
                out.push(Token {
                    tok: Tok::Num(v, text),
                    line: lno,
                    col,
                });
            } else {
                return Err(MapError::Parse {
                    line: lno,
                    col,
                    msg: format!("unexpected character '{c}'"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn err_at(&self, tok: Option<&Token>, msg: impl Into<String>) -> MapError {
        let (line, col) = tok.map(|t| (t.line, t.col)).unwrap_or(self.eof);
        MapError::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self, what: &str) -> Result<Token, MapError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(self.err_at(None, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), MapError> {
        let t = self.next(what)?;
        if t.tok == want {
            Ok(())
        } else {
            Err(self.err_at(Some(&t), format!("expected {what}")))
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, Token), MapError> {
        let t = self.next(what)?;
        match &t.tok {
            Tok::Word(w) => Ok((w.clone(), t)),
            _ => Err(self.err_at(Some(&t), format!("expected {what}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, MapError> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Num(v, _) if v.is_finite() => Ok(v),
            _ => Err(self.err_at(Some(&t), format!("expected {what}"))),
        }
    }

    fn integer(&mut self, what: &str) -> Result<u32, MapError> {
        let t = self.next(what)?;
        match &t.tok {
            Tok::Num(_, text) => text
                .parse::<u32>()
                .map_err(|_| self.err_at(Some(&t), format!("expected {what}, got '{text}'"))),
            _ => Err(self.err_at(Some(&t), format!("expected {what}"))),
        }
    }

    fn at_num(&self) -> bool {
        matches!(
            self.peek(),
            Some(Token {
                tok: Tok::Num(..),
                ..
            })
        )
    }

    fn points(&mut self) -> Result<Vec<Point2>, MapError> {
        let mut pts = Vec::new();
        while matches!(
            self.peek(),
            Some(Token {
                tok: Tok::LParen,
                ..
            })
        ) {
            self.pos += 1;
            let x = self.number("x coordinate")?;
            self.expect(Tok::Comma, "','")?;
            let y = self.number("y coordinate")?;
            self.expect(Tok::RParen, "')'")?;
            pts.push(Point2::new(x, y));
        }
        Ok(pts)
    }

    fn lane(&mut self) -> Result<LaneBuilder, MapError> {
        let id = self.integer("lane id")?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut b = LaneBuilder {
            id,
            ..Default::default()
        };
        let mut has_center = false;
        loop {
            let t = self.next("lane attribute or '}'")?;
            let key = match &t.tok {
                Tok::RBrace => break,
                Tok::Word(w) => w.clone(),
                _ => return Err(self.err_at(Some(&t), "expected lane attribute or '}'")),
            };
            match key.as_str() {
                "left" => b.left_neighbor = Some(self.integer("neighbor id")?),
                "right" => b.right_neighbor = Some(self.integer("neighbor id")?),
                "successors" => {
                    while self.at_num() {
                        b.successors.push(self.integer("successor id")?);
                    }
                }
                "drop" => b.drop = true,
                "center" => {
                    b.center = self.points()?;
                    has_center = true;
                }
                "left_boundary" => b.left_boundary = Some(self.points()?),
                "right_boundary" => b.right_boundary = Some(self.points()?),
                other => {
                    return Err(self.err_at(Some(&t), format!("unknown lane attribute '{other}'")))
                }
            }
        }
        if !has_center {
            return Err(MapError::Semantic(format!(
                "lane {id}: missing center line"
            )));
        }
        Ok(b)
    }
}

/// Parses and validates a map file.
pub fn parse_map(src: &str) -> Result<RoadMap, MapError> {
    let toks = tokenize(src)?;
    let last_line = src.lines().count().max(1);
    let mut p = Parser {
        toks,
        pos: 0,
        eof: (last_line, 1),
    };
    let (magic, t) = p.word("'lanemap' header")?;
    if magic != MAGIC {
        return Err(p.err_at(Some(&t), "expected 'lanemap' header"));
    }
    let version = p.integer("format version")?;
    if version != FORMAT_VERSION {
        return Err(p.err_at(
            p.toks.get(p.pos - 1),
            format!("unsupported format version {version}"),
        ));
    }
    let mut name = String::new();
    let mut builders = Vec::new();
    while p.peek().is_some() {
        let (kw, t) = p.word("'name' or 'lane'")?;
        match kw.as_str() {
            "name" => name = p.word("map name")?.0,
            "lane" => builders.push(p.lane()?),
            other => return Err(p.err_at(Some(&t), format!("unexpected keyword '{other}'"))),
        }
    }
    let lanes = builders
        .into_iter()
        .map(LaneBuilder::build)
        .collect::<Result<Vec<_>, _>>()?;
    RoadMap::new(name, lanes)
}

fn write_points(out: &mut String, key: &str, pts: &[Point2]) {
    let _ = write!(out, "  {key}");
    for p in pts {
        let _ = write!(out, " ({:?}, {:?})", p.x, p.y);
    }
    out.push('\n');
}

/// Canonical text form; boundaries are always written out explicitly.
pub fn serialize_map(map: &RoadMap) -> String {
    let mut out = format!("{MAGIC} {FORMAT_VERSION}\n");
    if !map.name.is_empty() {
        let _ = writeln!(out, "name {}", map.name);
    }
    for lane in map.lanes() {
        write_lane(&mut out, lane);
    }
    out
}

fn write_lane(out: &mut String, lane: &Lane) {
    let _ = writeln!(out, "lane {} {{", lane.id);
    if let Some(l) = lane.left_neighbor {
        let _ = writeln!(out, "  left {l}");
    }
    if let Some(r) = lane.right_neighbor {
        let _ = writeln!(out, "  right {r}");
    }
    if !lane.successors.is_empty() {
        out.push_str("  successors");
        for s in &lane.successors {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
    }
    if lane.drop {
        out.push_str("  drop\n");
    }
    write_points(out, "center", lane.center.points());
    write_points(out, "left_boundary", lane.left_boundary.points());
    write_points(out, "right_boundary", lane.right_boundary.points());
    out.push_str("}\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::LaneId;

    const TWO_LANE: &str = "lanemap 1
# two parallel lanes
name parallel
lane 1 { left 2 center (0,0) (100,0) }
lane 2 {
  right 1
  center (0, 3.5)
         (100, 3.5)
}
";

    #[test]
    fn parses_minimal_two_lane_file() {
        let m = parse_map(TWO_LANE).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.name, "parallel");
        assert_eq!(m.lane(LaneId(1)).unwrap().left_neighbor, Some(LaneId(2)));
        assert_eq!(m.lane(LaneId(2)).unwrap().right_neighbor, Some(LaneId(1)));
    }

    #[test]
    fn dangling_successor_names_the_id() {
        let src = "lanemap 1 lane 1 { successors 99 center (0,0) (1,0) }";
        assert_eq!(parse_map(src).unwrap_err().to_string(), "unknown lane 99");
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(parse_map(""), Err(MapError::Parse { .. })));
    }

    #[test]
    fn short_centerline_is_a_semantic_error() {
        let src = "lanemap 1 lane 1 { center (0,0) }";
        assert!(
            matches!(parse_map(src), Err(MapError::Semantic(m)) if m.contains("at least 2 points"))
        );
    }

    #[test]
    fn error_positions_point_at_the_token() {
        let src = "lanemap 1\nlane 1 {\n  center (0,0) (1,0)\n  bogus 3\n}\n";
        assert_eq!(
            parse_map(src).unwrap_err(),
            MapError::Parse {
                line: 4,
                col: 3,
                msg: "unknown lane attribute 'bogus'".into()
            }
        );
        let src = "lanemap 2\n";
        assert!(matches!(
            parse_map(src),
            Err(MapError::Parse {
                line: 1,
                col: 9,
                ..
            })
        ));
        let src = "lanemap 1 lane 1 { center (0,0) (1 0) }";
        assert!(
            matches!(parse_map(src), Err(MapError::Parse { msg, .. }) if msg == "expected ','")
        );
    }

    #[test]
    fn serialize_round_trips() {
        let m = parse_map(TWO_LANE).unwrap();
        let text = serialize_map(&m);
        assert_eq!(parse_map(&text).unwrap(), m);
        assert_eq!(serialize_map(&parse_map(&text).unwrap()), text);
    }
}
