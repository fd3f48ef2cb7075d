//! Signal-side types: the eight compatible phase pairs, colors, and the timed
//! color program that moves the intersection from one pair to another.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::shift::{PhaseId, NUM_PHASES};

/// Compatible NEMA phase pairs, in action-index order.
pub const PHASE_PAIRS: [(u8, u8); 8] = [(1, 5), (1, 6), (2, 5), (2, 6), (3, 7), (3, 8), (4, 7), (4, 8)];

pub const NUM_ACTIONS: usize = PHASE_PAIRS.len();

/// One of the eight compatible phase pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(u8);

impl Action {
    pub fn new(index: usize) -> Option<Self> {
        (index < NUM_ACTIONS).then_some(Self(index as u8))
    }

    pub fn from_pair(a: u8, b: u8) -> Option<Self> {
        PHASE_PAIRS
            .iter()
            .position(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b))
            .map(|i| Self(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn pair(self) -> (u8, u8) {
        PHASE_PAIRS[self.index()]
    }

    pub fn phases(self) -> [PhaseId; 2] {
        let (a, b) = self.pair();
        [PhaseId::new(a).unwrap(), PhaseId::new(b).unwrap()]
    }

    pub fn serves(self, phase: PhaseId) -> bool {
        self.phases().contains(&phase)
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..NUM_ACTIONS).map(|i| Action(i as u8))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.pair();
        write!(f, "({a},{b})")
    }
}

/// Two phases may be green together only if they form one of the pairs.
pub fn compatible(a: PhaseId, b: PhaseId) -> bool {
    a == b || Action::from_pair(a.number(), b.number()).is_some()
}

/// Set of actions, indexed like [`PHASE_PAIRS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActionMask(pub [bool; NUM_ACTIONS]);

impl ActionMask {
    pub fn all() -> Self {
        Self([true; NUM_ACTIONS])
    }

    pub fn only(action: Action) -> Self {
        let mut m = [false; NUM_ACTIONS];
        m[action.index()] = true;
        Self(m)
    }

    pub fn contains(&self, action: Action) -> bool {
        self.0[action.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = Action> + '_ {
        Action::all().filter(|a| self.contains(*a))
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalColor {
    Green,
    Yellow,
    AllRedClearance,
    Red,
}

impl SignalColor {
    /// Position in the four-way one-hot observation encoding.
    pub fn code(self) -> usize {
        match self {
            SignalColor::Green => 0,
            SignalColor::Yellow => 1,
            SignalColor::AllRedClearance => 2,
            SignalColor::Red => 3,
        }
    }
}

pub type Colors = [SignalColor; NUM_PHASES];

pub fn green_for(action: Action) -> Colors {
    let mut c = [SignalColor::Red; NUM_PHASES];
    for p in action.phases() {
        c[p.index()] = SignalColor::Green;
    }
    c
}

/// Per-second colors shown while switching, then the colors once the target
/// pair is green.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionProgram {
    pub to: Action,
    pub steps: Vec<Colors>,
    pub settled: Colors,
}

/// Timed color program for switching `from` -> `to`.
///
/// Phases leaving green show yellow for `yellow_s` seconds, then all-red
/// clearance for `all_red_s`. Phases shared by both pairs stay green
/// throughout; phases joining stay red until the program ends. `from == None`
/// is the start-up case: every phase shows all-red clearance first.
pub fn switch_transition(from: Option<Action>, to: Action, yellow_s: u32, all_red_s: u32) -> TransitionProgram {
    let settled = green_for(to);
    let Some(from) = from else {
        let steps = vec![[SignalColor::AllRedClearance; NUM_PHASES]; all_red_s as usize];
        return TransitionProgram { to, steps, settled };
    };
    if from == to {
        return TransitionProgram {
            to,
            steps: Vec::new(),
            settled,
        };
    }
    let leaving: Vec<PhaseId> = from.phases().into_iter().filter(|p| !to.serves(*p)).collect();
    let hold = green_for(from);
    let mut steps = Vec::with_capacity((yellow_s + all_red_s) as usize);
    for (color, secs) in [
        (SignalColor::Yellow, yellow_s),
        (SignalColor::AllRedClearance, all_red_s),
    ] {
        let mut c = hold;
        for p in &leaving {
            c[p.index()] = color;
        }
        steps.extend(std::iter::repeat_n(c, secs as usize));
    }
    TransitionProgram { to, steps, settled }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SignalColor::*;

    fn act(a: u8, b: u8) -> Action {
        Action::from_pair(a, b).unwrap()
    }

    #[test]
    fn eight_actions() {
        assert_eq!(Action::all().count(), 8);
        assert_eq!(act(2, 6).index(), 3);
        assert_eq!(act(6, 2), act(2, 6));
        assert!(Action::from_pair(1, 2).is_none());
        assert!(Action::new(8).is_none());
    }

    #[test]
    fn compatibility_table() {
        let p = |n| PhaseId::new(n).unwrap();
        assert!(compatible(p(1), p(5)));
        assert!(compatible(p(4), p(8)));
        assert!(!compatible(p(1), p(2)));
        assert!(!compatible(p(2), p(4)));
        assert!(!compatible(p(5), p(6)));
    }

    #[test]
    fn shared_phase_stays_green() {
        let prog = switch_transition(Some(act(1, 5)), act(1, 6), 3, 1);
        assert_eq!(prog.steps.len(), 4);
        for s in &prog.steps[..3] {
            assert_eq!(s[0], Green);
            assert_eq!(s[4], Yellow);
            assert_eq!(s[5], Red);
        }
        assert_eq!(prog.steps[3][4], AllRedClearance);
        assert_eq!(prog.steps[3][0], Green);
        assert_eq!(prog.settled[0], Green);
        assert_eq!(prog.settled[5], Green);
        assert_eq!(prog.settled[4], Red);
    }

    #[test]
    fn both_phases_leave_together() {
        let prog = switch_transition(Some(act(2, 6)), act(4, 8), 3, 1);
        for s in &prog.steps[..3] {
            assert_eq!((s[1], s[5]), (Yellow, Yellow));
            assert_eq!((s[3], s[7]), (Red, Red));
        }
        assert_eq!((prog.steps[3][1], prog.steps[3][5]), (AllRedClearance, AllRedClearance));
        assert_eq!(prog.settled, green_for(act(4, 8)));
    }

    #[test]
    fn same_action_has_no_program() {
        let prog = switch_transition(Some(act(3, 7)), act(3, 7), 3, 1);
        assert!(prog.steps.is_empty());
        assert_eq!(prog.settled, green_for(act(3, 7)));
    }

    #[test]
    fn startup_program_is_all_red() {
        let prog = switch_transition(None, act(2, 6), 3, 1);
        assert_eq!(prog.steps, vec![[AllRedClearance; 8]]);
    }
}
