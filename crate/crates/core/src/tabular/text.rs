//! Plain-text MDP tables.
//!
//! ```text
//! # comments and blank lines are ignored
//! <num_states> <num_actions> <gamma>
//! <r(s,a)> <T(0|s,a)> ... <T(n-1|s,a)>    one line per (s, a), s-major
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::mdp::TabularMDP;

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse()
        .map_err(|_| Error::Format(format!("line {line}: '{tok}' is not a number")))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Format(format!("line {line}: '{tok}' is not a count")))
}

pub fn parse_mdp(text: &str) -> Result<TabularMDP> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| Error::Format("empty MDP table".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 {
        return Err(Error::Format(format!(
            "line {hline}: header needs '<states> <actions> <gamma>'"
        )));
    }
    let ns = parse_usize(h[0], hline)?;
    let na = parse_usize(h[1], hline)?;
    let gamma = parse_f64(h[2], hline)?;
    let mut transitions = vec![Vec::with_capacity(na); ns];
    let mut rewards = vec![Vec::with_capacity(na); ns];
    for s in 0..ns {
        for _ in 0..na {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing rows: expected {} (s, a) lines", ns * na)))?;
            let vals = line
                .split_whitespace()
                .map(|t| parse_f64(t, ln))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != ns + 1 {
                return Err(Error::Format(format!(
                    "line {ln}: expected a reward and {ns} transition probabilities, got {} numbers",
                    vals.len()
                )));
            }
            rewards[s].push(vals[0]);
            transitions[s].push(vals[1..].to_vec());
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Format(format!("line {ln}: trailing data after the table")));
    }
    TabularMDP::new(transitions, rewards, gamma)
}

pub fn read_mdp<R: Read>(mut r: R) -> Result<TabularMDP> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse_mdp(&text)
}

pub fn write_mdp<W: Write>(mut w: W, mdp: &TabularMDP) -> Result<()> {
    writeln!(w, "{} {} {}", mdp.num_states(), mdp.num_actions(), mdp.gamma())?;
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            write!(w, "{}", mdp.reward(s, a))?;
            for p in mdp.transition_row(s, a) {
                write!(w, " {p}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
