//! Sokoban board model and push rules.
//!
//! States are push-to-push: the player's walking between pushes is implicit
//! via reachability, and a solution length counts pushes. The wall and goal
//! layout is immutable per instance and shared behind an `Arc`; the box set
//! and player cell are the mutable planning state. All operations are pure,
//! so boards are safe to share between concurrent workers.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Grid position, row-major.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Cell {
    pub row: u16,
    pub col: u16,
}

impl Cell {
    pub fn new(row: u16, col: u16) -> Self {
        Cell { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Push direction. Enumeration order (Up, Down, Left, Right) is the
/// canonical action order everywhere actions are listed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

pub const DIRECTIONS: [Direction; 4] = [
    Direction::Up,
    Direction::Down,
    Direction::Left,
    Direction::Right,
];

impl Direction {
    pub fn index(self) -> usize {
        match self {
            Direction::Up => 0,
            Direction::Down => 1,
            Direction::Left => 2,
            Direction::Right => 3,
        }
    }

    /// (row delta, col delta)
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    /// Lowercase move letter (lurd notation).
    pub fn letter(self) -> char {
        match self {
            Direction::Up => 'u',
            Direction::Down => 'd',
            Direction::Left => 'l',
            Direction::Right => 'r',
        }
    }
}

/// One push: move the box at `box_cell` one step in `dir`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PushAction {
    pub box_cell: Cell,
    pub dir: Direction,
}

impl fmt::Display for PushAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.box_cell, self.dir.letter().to_ascii_uppercase())
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum BoardError {
    #[error("no player cell in level text")]
    NoPlayer,
    #[error("multiple player cells (second at row {row}, col {col})")]
    MultiplePlayers { row: u16, col: u16 },
    #[error("unknown character {ch:?} at row {row}, col {col}")]
    UnknownChar { row: u16, col: u16, ch: char },
    #[error("{boxes} boxes but {goals} goals")]
    BoxGoalCountMismatch { boxes: usize, goals: usize },
    #[error("cell {0} out of bounds")]
    OutOfBounds(Cell),
    #[error("box at {0} overlaps a wall")]
    BoxOnWall(Cell),
    #[error("player at {0} overlaps a wall or box")]
    PlayerBlocked(Cell),
    #[error("two boxes share cell {0}")]
    DuplicateBox(Cell),
    #[error("illegal push {0}")]
    IllegalPush(PushAction),
    #[error("level text is empty")]
    EmptyLevel,
}

/// Immutable per-instance geometry: walls, goals and the statically dead
/// cells derived from them.
#[derive(Debug)]
pub struct Layout {
    width: u16,
    height: u16,
    walls: Vec<bool>,
    goals: Vec<bool>,
    goal_cells: Vec<u16>,
    /// Non-goal cells from which no push sequence can ever bring a box to a
    /// goal, walls-only analysis (corners and closed wall lines).
    dead: Vec<bool>,
}

impl Layout {
    fn new(width: u16, height: u16, walls: Vec<bool>, mut goal_cells: Vec<u16>) -> Arc<Layout> {
        let n = width as usize * height as usize;
        debug_assert_eq!(walls.len(), n);
        goal_cells.sort_unstable();
        goal_cells.dedup();
        let mut goals = vec![false; n];
        for &g in &goal_cells {
            goals[g as usize] = true;
        }
        let dead = compute_dead_cells(width, height, &walls, &goal_cells);
        Arc::new(Layout {
            width,
            height,
            walls,
            goals,
            goal_cells,
            dead,
        })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn n_cells(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row as usize * self.width as usize + cell.col as usize
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell {
            row: (index / self.width as usize) as u16,
            col: (index % self.width as usize) as u16,
        }
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        self.walls[self.index(cell)]
    }

    pub fn is_goal(&self, cell: Cell) -> bool {
        self.goals[self.index(cell)]
    }

    /// A box parked here (off goal) can never reach any goal.
    pub fn is_dead_cell(&self, cell: Cell) -> bool {
        self.dead[self.index(cell)]
    }

    pub fn goal_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.goal_cells.iter().map(|&i| self.cell(i as usize))
    }

    pub fn n_goals(&self) -> usize {
        self.goal_cells.len()
    }

    /// Neighbor index one step in `dir`, if in bounds.
    pub fn step(&self, index: usize, dir: Direction) -> Option<usize> {
        let (dr, dc) = dir.delta();
        let row = index as i32 / self.width as i32 + dr;
        let col = index as i32 % self.width as i32 + dc;
        if row < 0 || col < 0 || row >= self.height as i32 || col >= self.width as i32 {
            None
        } else {
            Some(row as usize * self.width as usize + col as usize)
        }
    }
}

/// A box on cell `c` can still reach some goal iff `c` is push-live: walking
/// backwards from every goal, a push into cell `x` from `y = x - d` needs
/// both `y` and the player square `y - d` to be clear of walls.
fn compute_dead_cells(width: u16, height: u16, walls: &[bool], goal_cells: &[u16]) -> Vec<bool> {
    let n = width as usize * height as usize;
    let mut live = vec![false; n];
    let mut queue: Vec<usize> = Vec::with_capacity(n);
    for &g in goal_cells {
        if !walls[g as usize] {
            live[g as usize] = true;
            queue.push(g as usize);
        }
    }
    let step = |index: usize, dir: Direction| -> Option<usize> {
        let (dr, dc) = dir.delta();
        let row = index as i32 / width as i32 + dr;
        let col = index as i32 % width as i32 + dc;
        if row < 0 || col < 0 || row >= height as i32 || col >= width as i32 {
            None
        } else {
            Some(row as usize * width as usize + col as usize)
        }
    };
    while let Some(x) = queue.pop() {
        for dir in DIRECTIONS {
            // A push moved the box from y to x, so y is live too.
            let back = dir.opposite();
            let Some(y) = step(x, back) else { continue };
            let Some(player) = step(y, back) else { continue };
            if !walls[y] && !walls[player] && !live[y] {
                live[y] = true;
                queue.push(y);
            }
        }
    }
    (0..n).map(|i| !walls[i] && !live[i]).collect()
}

/// Player flood fill result. `min_cell` is the smallest reachable cell index
/// and identifies the reachable region for state normalization.
#[derive(Clone, Debug)]
pub struct Reachable {
    mask: Vec<bool>,
    min_cell: u16,
}

impl Reachable {
    pub fn contains_index(&self, index: usize) -> bool {
        self.mask[index]
    }

    pub fn min_cell_index(&self) -> u16 {
        self.min_cell
    }

    pub fn iter_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
    }
}

/// Canonical state identity: the sorted box set plus the player's reachable
/// region (represented by its smallest cell). Two states whose players stand
/// anywhere in the same region compare equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct StateKey {
    boxes: Box<[u16]>,
    player_region: u16,
}

impl StateKey {
    /// FNV-1a digest, stable across processes and platforms.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut mix = |v: u16| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for &b in self.boxes.iter() {
            mix(b);
        }
        mix(self.player_region);
        h
    }
}

/// One Sokoban planning state.
#[derive(Clone, Debug)]
pub struct Board {
    layout: Arc<Layout>,
    /// Sorted cell indices.
    boxes: Vec<u16>,
    player: u16,
}

impl PartialEq for Board {
    fn eq(&self, other: &Self) -> bool {
        self.player == other.player
            && self.boxes == other.boxes
            && (Arc::ptr_eq(&self.layout, &other.layout)
                || (self.layout.width == other.layout.width
                    && self.layout.height == other.layout.height
                    && self.layout.walls == other.layout.walls
                    && self.layout.goal_cells == other.layout.goal_cells))
    }
}

impl Eq for Board {}

impl Board {
    /// Build a board from explicit components, validating every invariant.
    pub fn new(
        width: u16,
        height: u16,
        walls: Vec<bool>,
        goals: Vec<Cell>,
        boxes: Vec<Cell>,
        player: Cell,
    ) -> Result<Board, BoardError> {
        if boxes.len() != goals.len() {
            return Err(BoardError::BoxGoalCountMismatch {
                boxes: boxes.len(),
                goals: goals.len(),
            });
        }
        let bounds = |c: Cell| -> Result<(), BoardError> {
            if c.row < height && c.col < width {
                Ok(())
            } else {
                Err(BoardError::OutOfBounds(c))
            }
        };
        for &g in goals.iter().chain(boxes.iter()) {
            bounds(g)?;
        }
        bounds(player)?;
        let goal_ixs: Vec<u16> = goals
            .iter()
            .map(|&c| (c.row as usize * width as usize + c.col as usize) as u16)
            .collect();
        let layout = Layout::new(width, height, walls, goal_ixs);
        let mut box_ixs: Vec<u16> = boxes.iter().map(|&c| layout.index(c) as u16).collect();
        box_ixs.sort_unstable();
        for w in box_ixs.windows(2) {
            if w[0] == w[1] {
                return Err(BoardError::DuplicateBox(layout.cell(w[0] as usize)));
            }
        }
        for &b in &box_ixs {
            if layout.walls[b as usize] {
                return Err(BoardError::BoxOnWall(layout.cell(b as usize)));
            }
        }
        let player_ix = layout.index(player) as u16;
        if layout.walls[player_ix as usize] || box_ixs.binary_search(&player_ix).is_ok() {
            return Err(BoardError::PlayerBlocked(player));
        }
        Ok(Board {
            layout,
            boxes: box_ixs,
            player: player_ix,
        })
    }

    /// Parse a single level in XSB notation.
    ///
    /// `#` wall, `@` player, `+` player on goal, `$` box, `*` box on goal,
    /// `.` goal, space or `-` floor. Lines are right-padded to the widest
    /// line with floor; fully blank leading/trailing lines are ignored.
    pub fn parse_xsb(text: &str) -> Result<Board, BoardError> {
        let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
        let first = lines.iter().position(|l| !l.trim().is_empty());
        let Some(first) = first else {
            return Err(BoardError::EmptyLevel);
        };
        let last = lines.iter().rposition(|l| !l.trim().is_empty()).unwrap();
        let lines = &lines[first..=last];
        let height = lines.len() as u16;
        let width = lines.iter().map(|l| l.chars().count()).max().unwrap() as u16;
        let n = width as usize * height as usize;
        let mut walls = vec![false; n];
        let mut goals = Vec::new();
        let mut boxes = Vec::new();
        let mut player: Option<Cell> = None;
        for (r, line) in lines.iter().enumerate() {
            for (c, ch) in line.chars().enumerate() {
                let cell = Cell::new(r as u16, c as u16);
                let ix = r * width as usize + c;
                match ch {
                    '#' => walls[ix] = true,
                    ' ' | '-' => {}
                    '.' => goals.push(cell),
                    '$' => boxes.push(cell),
                    '*' => {
                        boxes.push(cell);
                        goals.push(cell);
                    }
                    '@' | '+' => {
                        if player.is_some() {
                            return Err(BoardError::MultiplePlayers {
                                row: cell.row,
                                col: cell.col,
                            });
                        }
                        player = Some(cell);
                        if ch == '+' {
                            goals.push(cell);
                        }
                    }
                    other => {
                        return Err(BoardError::UnknownChar {
                            row: cell.row,
                            col: cell.col,
                            ch: other,
                        })
                    }
                }
            }
        }
        let Some(player) = player else {
            return Err(BoardError::NoPlayer);
        };
        Board::new(width, height, walls, goals, boxes, player)
    }

    /// Render back to XSB notation. Trailing floor is trimmed per row, floor
    /// renders as a space, so `parse_xsb(render_xsb(b)) == b` exactly.
    pub fn render_xsb(&self) -> String {
        let mut out = String::new();
        for r in 0..self.layout.height {
            let mut row = String::new();
            for c in 0..self.layout.width {
                let cell = Cell::new(r, c);
                let ix = self.layout.index(cell) as u16;
                let ch = if self.layout.walls[ix as usize] {
                    '#'
                } else if self.boxes.binary_search(&ix).is_ok() {
                    if self.layout.goals[ix as usize] {
                        '*'
                    } else {
                        '$'
                    }
                } else if ix == self.player {
                    if self.layout.goals[ix as usize] {
                        '+'
                    } else {
                        '@'
                    }
                } else if self.layout.goals[ix as usize] {
                    '.'
                } else {
                    ' '
                };
                row.push(ch);
            }
            out.push_str(row.trim_end());
            if r + 1 < self.layout.height {
                out.push('\n');
            }
        }
        out
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn width(&self) -> u16 {
        self.layout.width
    }

    pub fn height(&self) -> u16 {
        self.layout.height
    }

    pub fn n_boxes(&self) -> usize {
        self.boxes.len()
    }

    pub fn player(&self) -> Cell {
        self.layout.cell(self.player as usize)
    }

    pub fn box_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.boxes.iter().map(|&i| self.layout.cell(i as usize))
    }

    pub fn has_box_index(&self, index: usize) -> bool {
        self.boxes.binary_search(&(index as u16)).is_ok()
    }

    fn occupied(&self, index: usize) -> bool {
        self.layout.walls[index] || self.has_box_index(index)
    }

    /// Flood fill from the player through cells that are neither wall nor
    /// box. Always contains the player cell.
    pub fn player_reachable(&self) -> Reachable {
        let n = self.layout.n_cells();
        let mut mask = vec![false; n];
        let mut queue = Vec::with_capacity(64);
        let start = self.player as usize;
        mask[start] = true;
        queue.push(start);
        let mut min_cell = start;
        while let Some(x) = queue.pop() {
            for dir in DIRECTIONS {
                if let Some(y) = self.layout.step(x, dir) {
                    if !mask[y] && !self.occupied(y) {
                        mask[y] = true;
                        if y < min_cell {
                            min_cell = y;
                        }
                        queue.push(y);
                    }
                }
            }
        }
        Reachable {
            mask,
            min_cell: min_cell as u16,
        }
    }

    /// All legal pushes, row-major by box cell then Up/Down/Left/Right.
    /// `(b, d)` is legal iff the player can reach `b - d` and `b + d` is
    /// neither wall nor box. Goal status never affects legality.
    pub fn legal_pushes(&self) -> Vec<PushAction> {
        self.legal_pushes_with(&self.player_reachable())
    }

    /// Same as [`Board::legal_pushes`] with a precomputed flood fill.
    pub fn legal_pushes_with(&self, reach: &Reachable) -> Vec<PushAction> {
        let mut out = Vec::new();
        for &b in &self.boxes {
            for dir in DIRECTIONS {
                let Some(from) = self.layout.step(b as usize, dir.opposite()) else {
                    continue;
                };
                let Some(to) = self.layout.step(b as usize, dir) else {
                    continue;
                };
                if reach.contains_index(from) && !self.occupied(to) {
                    out.push(PushAction {
                        box_cell: self.layout.cell(b as usize),
                        dir,
                    });
                }
            }
        }
        out
    }

    /// Apply a push after verifying it is legal in this state.
    pub fn apply_push(&self, action: PushAction) -> Result<Board, BoardError> {
        if !self.layout.in_bounds(action.box_cell) {
            return Err(BoardError::IllegalPush(action));
        }
        let b = self.layout.index(action.box_cell);
        if !self.has_box_index(b) {
            return Err(BoardError::IllegalPush(action));
        }
        let Some(from) = self.layout.step(b, action.dir.opposite()) else {
            return Err(BoardError::IllegalPush(action));
        };
        let Some(to) = self.layout.step(b, action.dir) else {
            return Err(BoardError::IllegalPush(action));
        };
        if self.occupied(to) || !self.player_reachable().contains_index(from) {
            return Err(BoardError::IllegalPush(action));
        }
        Ok(self.pushed(b, to))
    }

    /// Apply a push already known to be legal (from [`Board::legal_pushes`]).
    pub(crate) fn apply_push_unverified(&self, action: PushAction) -> Board {
        let b = self.layout.index(action.box_cell);
        let to = self.layout.step(b, action.dir).expect("push target in bounds");
        self.pushed(b, to)
    }

    fn pushed(&self, from: usize, to: usize) -> Board {
        let mut boxes = self.boxes.clone();
        let pos = boxes.binary_search(&(from as u16)).expect("box present");
        boxes.remove(pos);
        let ins = boxes.binary_search(&(to as u16)).unwrap_err();
        boxes.insert(ins, to as u16);
        Board {
            layout: Arc::clone(&self.layout),
            boxes,
            player: from as u16,
        }
    }

    /// True iff the box set equals the goal set.
    pub fn is_goal(&self) -> bool {
        self.boxes == self.layout.goal_cells
    }

    /// Any box parked on a statically dead cell makes the state a dead end.
    pub fn has_static_deadlock(&self) -> bool {
        self.boxes.iter().any(|&b| self.layout.dead[b as usize])
    }

    pub fn state_key(&self) -> StateKey {
        self.state_key_with(&self.player_reachable())
    }

    pub fn state_key_with(&self, reach: &Reachable) -> StateKey {
        StateKey {
            boxes: self.boxes.clone().into_boxed_slice(),
            player_region: reach.min_cell_index(),
        }
    }

    /// Replace boxes and goals while keeping walls and player. Used by
    /// subcase generation; validates the result like [`Board::new`].
    pub fn with_boxes_and_goals(
        &self,
        boxes: Vec<Cell>,
        goals: Vec<Cell>,
    ) -> Result<Board, BoardError> {
        Board::new(
            self.layout.width,
            self.layout.height,
            self.layout.walls.clone(),
            goals,
            boxes,
            self.player(),
        )
    }
}

impl fmt::Display for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_xsb())
    }
}
