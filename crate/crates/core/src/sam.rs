//! Suffix automaton over a symbol sequence, used to compute longest-match
//! lengths against the strict past in amortized linear time.
//!
//! Each state stores the minimal end position (`first_end`) over all
//! occurrences of its substrings; all substrings of one state share an
//! end-position set, so the value is well defined per state. A substring
//! occurs fully inside the prefix `x[0..i)` exactly when its `first_end`
//! is at most `i - 1`.

use std::collections::HashMap;

struct State {
    next: HashMap<u32, u32>,
    link: u32,
    len: u32,
    /// Minimal inclusive end index over all occurrences.
    first_end: u32,
}

const NO_LINK: u32 = u32::MAX;

pub(crate) struct SuffixAutomaton {
    states: Vec<State>,
    last: u32,
}

impl SuffixAutomaton {
    pub(crate) fn build(symbols: &[u32]) -> Self {
        let mut sam = SuffixAutomaton {
            states: vec![State {
                next: HashMap::new(),
                link: NO_LINK,
                len: 0,
                first_end: u32::MAX,
            }],
            last: 0,
        };
        for (pos, &c) in symbols.iter().enumerate() {
            sam.extend(c, pos as u32);
        }
        sam
    }

    fn extend(&mut self, c: u32, pos: u32) {
        let cur = self.states.len() as u32;
        let cur_len = self.states[self.last as usize].len + 1;
        self.states.push(State {
            next: HashMap::new(),
            link: NO_LINK,
            len: cur_len,
            first_end: pos,
        });
        let mut p = self.last;
        while p != NO_LINK && !self.states[p as usize].next.contains_key(&c) {
            self.states[p as usize].next.insert(c, cur);
            p = self.states[p as usize].link;
        }
        if p == NO_LINK {
            self.states[cur as usize].link = 0;
        } else {
            let q = self.states[p as usize].next[&c];
            if self.states[p as usize].len + 1 == self.states[q as usize].len {
                self.states[cur as usize].link = q;
            } else {
                let clone = self.states.len() as u32;
                let cloned = State {
                    next: self.states[q as usize].next.clone(),
                    link: self.states[q as usize].link,
                    len: self.states[p as usize].len + 1,
                    first_end: self.states[q as usize].first_end,
                };
                self.states.push(cloned);
                while p != NO_LINK && self.states[p as usize].next.get(&c) == Some(&q) {
                    self.states[p as usize].next.insert(c, clone);
                    p = self.states[p as usize].link;
                }
                self.states[q as usize].link = clone;
                self.states[cur as usize].link = clone;
            }
        }
        self.last = cur;
    }

    /// For each position `i`, the longest `m` such that `x[i..i+m)` occurs
    /// as a contiguous substring fully inside `x[0..i)`.
    ///
    /// Walks left to right keeping the current match; moving to the next
    /// position drops the first matched symbol via suffix links, which
    /// amortizes to linear over the whole sequence.
    pub(crate) fn longest_past_matches(symbols: &[u32]) -> Vec<u32> {
        let sam = SuffixAutomaton::build(symbols);
        let n = symbols.len();
        let mut out = Vec::with_capacity(n);
        let mut state = 0u32;
        let mut matched = 0u32;
        for i in 0..n {
            while i + (matched as usize) < n {
                let c = symbols[i + matched as usize];
                match sam.states[state as usize].next.get(&c) {
                    Some(&t) if (sam.states[t as usize].first_end as usize) < i => {
                        state = t;
                        matched += 1;
                    }
                    _ => break,
                }
            }
            out.push(matched);
            if matched > 0 {
                matched -= 1;
                while state != 0
                    && sam.states[sam.states[state as usize].link as usize].len >= matched
                {
                    state = sam.states[state as usize].link;
                }
                if matched == 0 {
                    state = 0;
                }
            }
        }
        out
    }
}
