//! 4-neighbor grid maps and the movingai `.map` format.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Cell index `y * width + x`. Blocked cells have indices too but never appear in paths.
pub type Vertex = u32;

/// Marker for unreachable entries in distance tables.
pub const INF: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
}

/// Up to four orthogonal neighbors, stored inline.
#[derive(Clone, Copy, Debug)]
pub struct Neighbors {
    items: [Vertex; 4],
    len: u8,
    pos: u8,
}

impl Iterator for Neighbors {
    type Item = Vertex;
    fn next(&mut self) -> Option<Vertex> {
        if self.pos < self.len {
            self.pos += 1;
            Some(self.items[self.pos as usize - 1])
        } else {
            None
        }
    }
}

impl GridMap {
    pub fn new(width: usize, height: usize, blocked: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidMap("width and height must be positive".into()));
        }
        if blocked.len() != width * height {
            return Err(Error::InvalidMap(format!(
                "expected {} cells, got {}",
                width * height,
                blocked.len()
            )));
        }
        Ok(GridMap { width, height, blocked })
    }

    /// Obstacle-free map.
    pub fn open(width: usize, height: usize) -> Self {
        GridMap::new(width, height, vec![false; width * height]).expect("positive size")
    }

    /// Builds a map from rows of `.` (free) and `@` (blocked); any movingai symbol is accepted.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut blocked = Vec::with_capacity(width * height);
        for (i, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Parse { line: i + 1, msg: "row length mismatch".into() });
            }
            for c in row.chars() {
                blocked.push(symbol_blocked(c).ok_or_else(|| Error::Parse {
                    line: i + 1,
                    msg: format!("unknown symbol {c:?}"),
                })?);
            }
        }
        GridMap::new(width, height, blocked)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn vertex(&self, x: usize, y: usize) -> Vertex {
        debug_assert!(x < self.width && y < self.height);
        (y * self.width + x) as Vertex
    }

    pub fn coords(&self, v: Vertex) -> (usize, usize) {
        let v = v as usize;
        (v % self.width, v / self.width)
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_free(&self, v: Vertex) -> bool {
        (v as usize) < self.blocked.len() && !self.blocked[v as usize]
    }

    pub fn is_free_xy(&self, x: i64, y: i64) -> bool {
        self.in_bounds(x, y) && !self.blocked[y as usize * self.width + x as usize]
    }

    pub fn free_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.cells() as Vertex).filter(|&v| self.is_free(v))
    }

    pub fn num_vertices(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn num_edges(&self) -> usize {
        self.free_vertices().map(|v| self.degree(v)).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: Vertex) -> Neighbors {
        let (x, y) = self.coords(v);
        let (x, y) = (x as i64, y as i64);
        let mut out = Neighbors { items: [0; 4], len: 0, pos: 0 };
        for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
            if self.is_free_xy(x + dx, y + dy) {
                out.items[out.len as usize] = self.vertex((x + dx) as usize, (y + dy) as usize);
                out.len += 1;
            }
        }
        out
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.neighbors(v).len as usize
    }

    pub fn adjacent(&self, u: Vertex, v: Vertex) -> bool {
        self.neighbors(u).any(|w| w == v)
    }

    pub fn manhattan(&self, u: Vertex, v: Vertex) -> u32 {
        let (ux, uy) = self.coords(u);
        let (vx, vy) = self.coords(v);
        (ux.abs_diff(vx) + uy.abs_diff(vy)) as u32
    }

    /// Serializes in movingai format using `.` and `@`.
    pub fn to_movingai(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(if self.blocked[y * self.width + x] { '@' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    /// Human-readable cell name such as `(3,4)`.
    pub fn label(&self, v: Vertex) -> String {
        let (x, y) = self.coords(v);
        format!("({x},{y})")
    }
}

fn symbol_blocked(c: char) -> Option<bool> {
    match c {
        '.' | 'G' => Some(false),
        '@' | 'O' | 'T' | 'S' | 'W' => Some(true),
        _ => None,
    }
}

/// Parses a movingai `.map` file. CRLF and LF line endings are both accepted.
pub fn parse_map(text: &str) -> Result<GridMap> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).enumerate();
    let mut header = |key: &str| -> Result<String> {
        let (i, line) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("missing `{key}`") })?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::Parse { line: i + 1, msg: format!("expected `{key}`") });
        }
        Ok(parts.collect::<Vec<_>>().join(" "))
    };
    header("type")?;
    let height = header("height")?;
    let width = header("width")?;
    let parse_dim = |s: &str, line: usize| -> Result<usize> {
        s.trim().parse::<usize>().map_err(|_| Error::Parse { line, msg: format!("bad dimension {s:?}") })
    };
    let height = parse_dim(&height, 2)?;
    let width = parse_dim(&width, 3)?;
    header("map")?;
    let mut blocked = Vec::with_capacity(width * height);
    for row in 0..height {
        let (i, line) = lines.next().ok_or(Error::Parse {
            line: 5 + row,
            msg: format!("expected {height} map rows, found {row}"),
        })?;
        if line.chars().count() != width {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("row has {} symbols, expected {width}", line.chars().count()),
            });
        }
        for c in line.chars() {
            blocked.push(
                symbol_blocked(c)
                    .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("unknown symbol {c:?}") })?,
            );
        }
    }
    for (i, line) in lines {
        if !line.trim().is_empty() {
            return Err(Error::Parse { line: i + 1, msg: "trailing content after map rows".into() });
        }
    }
    GridMap::new(width, height, blocked).map_err(|e| Error::Parse { line: 2, msg: e.to_string() })
}

/// Breadth-first move counts from `source` to every cell; `INF` where unreachable or blocked.
pub fn true_distance(map: &GridMap, source: Vertex) -> Result<Vec<u32>> {
    if !map.is_free(source) {
        return Err(Error::BlockedVertex(map.label(source)));
    }
    let mut dist = vec![INF; map.cells()];
    let mut queue = VecDeque::new();
    dist[source as usize] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize] + 1;
        for w in map.neighbors(u) {
            if dist[w as usize] == INF {
                dist[w as usize] = d;
                queue.push_back(w);
            }
        }
    }
    Ok(dist)
}

pub fn vertex_degree(map: &GridMap, v: Vertex) -> usize {
    map.degree(v)
}
