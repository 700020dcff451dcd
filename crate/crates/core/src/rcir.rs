//! Classical reversible circuits.
//!
//! A [`RevCircuit`] is built from five constructs: `skip`, bit flip, a
//! single-bit control around a sub-circuit, a two-bit swap and binary
//! sequencing. Its meaning is a permutation of boolean registers, computed
//! by [`eval_rcir`]. Circuits are checked for well-typedness before they
//! run: every index in range, no swap of a bit with itself, and no control
//! bit written inside the body it controls.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RcirError {
    #[error("bit index {index} out of range for a {width}-bit register")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("control bit {control} is written inside its own body")]
    ControlTargeted { control: usize },
    #[error("swap of bit {index} with itself")]
    DegenerateSwap { index: usize },
    #[error("register width mismatch: circuit typed for {expected} bits, register has {actual}")]
    WidthMismatch { expected: usize, actual: usize },
}

/// Abstract syntax of a reversible circuit.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum RevCircuit {
    Skip,
    Not(usize),
    Ctrl(usize, Box<RevCircuit>),
    Swap(usize, usize),
    Seq(Box<RevCircuit>, Box<RevCircuit>),
}

impl RevCircuit {
    pub fn not(target: usize) -> Self {
        RevCircuit::Not(target)
    }

    pub fn ctrl(control: usize, body: RevCircuit) -> Self {
        RevCircuit::Ctrl(control, Box::new(body))
    }

    pub fn swap(i: usize, j: usize) -> Self {
        RevCircuit::Swap(i, j)
    }

    pub fn seq(first: RevCircuit, second: RevCircuit) -> Self {
        RevCircuit::Seq(Box::new(first), Box::new(second))
    }

    /// `ctrl c1 (ctrl c2 (... (X t)))`.
    pub fn mcx(controls: &[usize], target: usize) -> Self {
        controls
            .iter()
            .rev()
            .fold(RevCircuit::Not(target), |body, &c| RevCircuit::ctrl(c, body))
    }

    /// Sequences any number of circuits as nested binary `Seq` nodes.
    ///
    /// The nesting is balanced, so a sequence of `k` parts has depth
    /// `O(log k)`; an empty input yields `Skip`.
    pub fn seq_all<I>(parts: I) -> Self
    where
        I: IntoIterator<Item = RevCircuit>,
    {
        let parts: Vec<RevCircuit> = parts
            .into_iter()
            .filter(|p| !matches!(p, RevCircuit::Skip))
            .collect();
        balanced(parts)
    }

    pub fn then(self, next: RevCircuit) -> Self {
        RevCircuit::seq(self, next)
    }

    /// Structural reversal. Every primitive is self-inverse, so only
    /// sequencing changes: `(R1; R2)^rev = R2^rev; R1^rev`.
    pub fn reverse(&self) -> RevCircuit {
        match self {
            RevCircuit::Skip => RevCircuit::Skip,
            RevCircuit::Not(t) => RevCircuit::Not(*t),
            RevCircuit::Ctrl(c, body) => RevCircuit::ctrl(*c, body.reverse()),
            RevCircuit::Swap(i, j) => RevCircuit::Swap(*i, *j),
            RevCircuit::Seq(a, b) => RevCircuit::seq(b.reverse(), a.reverse()),
        }
    }

    /// Number of `Not`/`Swap` leaves.
    pub fn primitive_count(&self) -> usize {
        self.control_profile().iter().sum()
    }

    /// Leaf counts indexed by how many controls enclose them.
    pub fn control_profile(&self) -> Vec<usize> {
        let mut profile = Vec::new();
        self.visit_leaves(&mut |controls, _| {
            if profile.len() <= controls.len() {
                profile.resize(controls.len() + 1, 0);
            }
            profile[controls.len()] += 1;
        });
        profile
    }

    /// Deepest control nesting over all leaves.
    pub fn control_depth(&self) -> usize {
        self.control_profile().len().saturating_sub(1)
    }

    /// Largest bit index mentioned anywhere, if any.
    pub fn max_index(&self) -> Option<usize> {
        let mut max = None;
        self.visit_leaves(&mut |controls, leaf| {
            let local = match leaf {
                Leaf::Not(t) => t,
                Leaf::Swap(i, j) => i.max(j),
            };
            let local = controls.iter().copied().fold(local, usize::max);
            max = Some(max.map_or(local, |m: usize| m.max(local)));
        });
        max
    }

    /// Calls `f(controls, leaf)` for every leaf in execution order.
    pub fn visit_leaves<F>(&self, f: &mut F)
    where
        F: FnMut(&[usize], Leaf),
    {
        let mut controls = Vec::new();
        self.visit_inner(&mut controls, f);
    }

    fn visit_inner<F>(&self, controls: &mut Vec<usize>, f: &mut F)
    where
        F: FnMut(&[usize], Leaf),
    {
        match self {
            RevCircuit::Skip => {}
            RevCircuit::Not(t) => f(controls, Leaf::Not(*t)),
            RevCircuit::Swap(i, j) => f(controls, Leaf::Swap(*i, *j)),
            RevCircuit::Ctrl(c, body) => {
                controls.push(*c);
                body.visit_inner(controls, f);
                controls.pop();
            }
            RevCircuit::Seq(a, b) => {
                a.visit_inner(controls, f);
                b.visit_inner(controls, f);
            }
        }
    }

    /// Checks the typing rules against a register of `width` bits.
    pub fn check(&self, width: usize) -> Result<(), RcirError> {
        let mut err = None;
        self.visit_leaves(&mut |controls, leaf| {
            if err.is_some() {
                return;
            }
            let targets: &[usize] = match &leaf {
                Leaf::Not(t) => core::slice::from_ref(t),
                Leaf::Swap(i, j) => {
                    if i == j {
                        err = Some(RcirError::DegenerateSwap { index: *i });
                        return;
                    }
                    &[*i, *j][..]
                }
            };
            for &index in controls.iter().chain(targets) {
                if index >= width {
                    err = Some(RcirError::IndexOutOfRange { index, width });
                    return;
                }
            }
            if let Some(&control) = controls.iter().find(|c| targets.contains(c)) {
                err = Some(RcirError::ControlTargeted { control });
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    pub fn well_typed(&self, width: usize) -> bool {
        self.check(width).is_ok()
    }

    /// Flattens into a checked straight-line program.
    pub fn compile(&self, width: usize) -> Result<RevProgram, RcirError> {
        self.check(width)?;
        let mut ops = Vec::new();
        self.visit_leaves(&mut |controls, leaf| {
            ops.push(FlatOp {
                controls: controls.to_vec(),
                leaf,
            })
        });
        Ok(RevProgram { width, ops })
    }
}

fn balanced(mut parts: Vec<RevCircuit>) -> RevCircuit {
    match parts.len() {
        0 => RevCircuit::Skip,
        1 => parts.pop().unwrap(),
        len => {
            let right = parts.split_off(len / 2);
            RevCircuit::seq(balanced(parts), balanced(right))
        }
    }
}

/// A primitive with its controls stripped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leaf {
    Not(usize),
    Swap(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatOp {
    pub controls: Vec<usize>,
    pub leaf: Leaf,
}

/// A well-typed circuit lowered to a list of multi-controlled primitives.
#[derive(Clone, Debug)]
pub struct RevProgram {
    width: usize,
    ops: Vec<FlatOp>,
}

impl RevProgram {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ops(&self) -> &[FlatOp] {
        &self.ops
    }

    pub fn apply(&self, reg: &mut BitRegister) -> Result<(), RcirError> {
        if reg.width() != self.width {
            return Err(RcirError::WidthMismatch {
                expected: self.width,
                actual: reg.width(),
            });
        }
        for op in &self.ops {
            if op.controls.iter().all(|&c| reg.get(c)) {
                match op.leaf {
                    Leaf::Not(t) => reg.flip(t),
                    Leaf::Swap(i, j) => reg.swap(i, j),
                }
            }
        }
        Ok(())
    }
}

/// Runs `c` on a copy of `s`.
pub fn eval_rcir(c: &RevCircuit, s: &BitRegister) -> Result<BitRegister, RcirError> {
    let program = c.compile(s.width())?;
    let mut out = s.clone();
    program.apply(&mut out)?;
    Ok(out)
}

pub fn reverse(c: &RevCircuit) -> RevCircuit {
    c.reverse()
}

pub fn well_typed(c: &RevCircuit, width: usize) -> bool {
    c.well_typed(width)
}

pub fn primitive_count(c: &RevCircuit) -> usize {
    c.primitive_count()
}

impl fmt::Debug for RevCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn seq_items<'a>(c: &'a RevCircuit, out: &mut Vec<&'a RevCircuit>) {
            match c {
                RevCircuit::Seq(a, b) => {
                    seq_items(a, out);
                    seq_items(b, out);
                }
                other => out.push(other),
            }
        }
        fn go(c: &RevCircuit, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let pad = depth * 2;
            match c {
                RevCircuit::Skip => writeln!(f, "{:pad$}skip", ""),
                RevCircuit::Not(t) => writeln!(f, "{:pad$}x {t}", ""),
                RevCircuit::Swap(i, j) => writeln!(f, "{:pad$}swap {i} {j}", ""),
                RevCircuit::Ctrl(c, body) => {
                    writeln!(f, "{:pad$}ctrl {c}", "")?;
                    go(body, depth + 1, f)
                }
                RevCircuit::Seq(..) => {
                    let mut items = Vec::new();
                    seq_items(c, &mut items);
                    writeln!(f, "{:pad$}seq", "")?;
                    items.into_iter().try_for_each(|i| go(i, depth + 1, f))
                }
            }
        }
        go(self, 0, f)
    }
}

/// Fixed-width boolean register; bit 0 is the least significant.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRegister {
    width: usize,
    words: Vec<u64>,
}

impl BitRegister {
    pub fn zeros(width: usize) -> Self {
        BitRegister {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    /// `[value]_width`. Bits of `value` above `width` are dropped.
    pub fn from_value(width: usize, value: u128) -> Self {
        let mut reg = Self::zeros(width);
        for i in 0..width.min(128) {
            if (value >> i) & 1 == 1 {
                reg.set(i, true);
            }
        }
        reg
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut reg = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            reg.set(i, b);
        }
        reg
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.width, "bit {i} out of range ({})", self.width);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.width, "bit {i} out of range ({})", self.width);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.width, "bit {i} out of range ({})", self.width);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn swap(&mut self, i: usize, j: usize) {
        let (a, b) = (self.get(i), self.get(j));
        if a != b {
            self.flip(i);
            self.flip(j);
        }
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.width).map(|i| self.get(i)).collect()
    }

    /// Integer view. Panics for registers wider than 128 bits.
    pub fn value(&self) -> u128 {
        assert!(self.width <= 128, "register too wide for an integer view");
        self.field(0, self.width)
    }

    /// Integer value of bits `offset..offset + len` (`len <= 128`).
    pub fn field(&self, offset: usize, len: usize) -> u128 {
        assert!(len <= 128);
        (0..len).fold(0u128, |acc, i| acc | ((self.get(offset + i) as u128) << i))
    }

    pub fn set_field(&mut self, offset: usize, len: usize, value: u128) {
        assert!(len <= 128);
        for i in 0..len {
            self.set(offset + i, (value >> i) & 1 == 1);
        }
    }

    pub fn is_zero_range(&self, offset: usize, len: usize) -> bool {
        (offset..offset + len).all(|i| !self.get(i))
    }
}

impl fmt::Debug for BitRegister {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in (0..self.width).rev() {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, "]_{}", self.width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn maj(a: usize, b: usize, c: usize) -> RevCircuit {
        RevCircuit::seq_all([
            RevCircuit::ctrl(c, RevCircuit::not(b)),
            RevCircuit::ctrl(c, RevCircuit::not(a)),
            RevCircuit::ctrl(a, RevCircuit::ctrl(b, RevCircuit::not(c))),
        ])
    }

    #[test]
    fn skip_is_identity() {
        let s = BitRegister::from_value(4, 5);
        assert_eq!(eval_rcir(&RevCircuit::Skip, &s).unwrap(), s);
    }

    #[test]
    fn single_flip() {
        let out = eval_rcir(&RevCircuit::not(0), &BitRegister::from_value(1, 0)).unwrap();
        assert_eq!(out.value(), 1);
    }

    #[test]
    fn maj_hand_evaluated() {
        // (v_a, v_b, v_c) = (1, 0, 1): a <- 1^1, b <- 0^1, c <- maj = 1
        let s = BitRegister::from_bits(&[true, false, true]);
        let out = eval_rcir(&maj(0, 1, 2), &s).unwrap();
        assert_eq!(out.bits(), [false, true, true]);
    }

    #[test]
    fn reverse_rules() {
        assert_eq!(RevCircuit::Skip.reverse(), RevCircuit::Skip);
        let c = RevCircuit::seq(RevCircuit::not(0), RevCircuit::swap(1, 2));
        assert_eq!(
            c.reverse(),
            RevCircuit::seq(RevCircuit::swap(1, 2), RevCircuit::not(0))
        );
        let c = RevCircuit::ctrl(3, RevCircuit::not(1));
        assert_eq!(c.reverse(), c);
    }

    #[test]
    fn typing() {
        assert!(well_typed(&RevCircuit::not(0), 1));
        assert!(!well_typed(&RevCircuit::not(3), 2));
        assert!(!well_typed(&RevCircuit::ctrl(0, RevCircuit::not(0)), 2));
        assert!(!well_typed(&RevCircuit::swap(1, 1), 2));
        assert!(!well_typed(&RevCircuit::ctrl(0, RevCircuit::swap(0, 1)), 2));
        assert!(well_typed(&RevCircuit::ctrl(0, RevCircuit::swap(1, 2)), 3));
        assert_eq!(
            eval_rcir(&RevCircuit::not(3), &BitRegister::zeros(2)),
            Err(RcirError::IndexOutOfRange { index: 3, width: 2 })
        );
    }

    /// A controlled flip of the control bit is not a permutation: building
    /// its truth table shows two inputs colliding.
    #[test]
    fn control_as_target_is_not_a_permutation() {
        let image = |s: u8| -> u8 {
            let c0 = s & 1;
            if c0 == 1 {
                s ^ 1
            } else {
                s
            }
        };
        assert_eq!(image(0), image(1));
        assert!(!well_typed(&RevCircuit::ctrl(0, RevCircuit::not(0)), 2));
    }

    #[test]
    fn counts() {
        assert_eq!(primitive_count(&RevCircuit::Skip), 0);
        assert_eq!(
            primitive_count(&RevCircuit::seq(RevCircuit::not(0), RevCircuit::not(1))),
            2
        );
        assert_eq!(primitive_count(&maj(0, 1, 2)), 3);
        assert_eq!(maj(0, 1, 2).control_profile(), [0, 2, 1]);
        assert_eq!(maj(0, 1, 2).control_depth(), 2);
    }

    #[test]
    fn swap_matches_three_controlled_flips() {
        let three = RevCircuit::seq_all([
            RevCircuit::ctrl(0, RevCircuit::not(1)),
            RevCircuit::ctrl(1, RevCircuit::not(0)),
            RevCircuit::ctrl(0, RevCircuit::not(1)),
        ]);
        for v in 0..4 {
            let s = BitRegister::from_value(2, v);
            assert_eq!(
                eval_rcir(&RevCircuit::swap(0, 1), &s).unwrap(),
                eval_rcir(&three, &s).unwrap()
            );
        }
    }

    #[test]
    fn pretty_printer_indents_by_depth() {
        let text = format!("{:?}", RevCircuit::seq(RevCircuit::not(0), RevCircuit::ctrl(1, RevCircuit::swap(2, 3))));
        assert_eq!(text, "seq\n  x 0\n  ctrl 1\n    swap 2 3\n");
    }

    #[test]
    fn seq_all_is_balanced() {
        let c = RevCircuit::seq_all((0..1024).map(|i| RevCircuit::not(i % 7)));
        fn depth(c: &RevCircuit) -> usize {
            match c {
                RevCircuit::Seq(a, b) => 1 + depth(a).max(depth(b)),
                RevCircuit::Ctrl(_, b) => 1 + depth(b),
                _ => 0,
            }
        }
        assert_eq!(depth(&c), 10);
        assert_eq!(c.primitive_count(), 1024);
        assert_eq!(RevCircuit::seq_all([]), RevCircuit::Skip);
    }
}
