//! Qualitative reachability on the support graph of a model.
//!
//! All routines work on the successor structure only (state -> choices ->
//! successors with positive probability). The `exists`/`all` variants
//! quantify over schedulers.

#[derive(Debug, Clone, Default)]
pub struct Support {
    succ: Vec<Vec<Vec<usize>>>,
}

impl Support {
    pub fn new(succ: Vec<Vec<Vec<usize>>>) -> Self {
        Support { succ }
    }

    pub fn num_states(&self) -> usize {
        self.succ.len()
    }

    pub fn choices(&self, state: usize) -> &[Vec<usize>] {
        &self.succ[state]
    }

    fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.succ.len()];
        for (s, choices) in self.succ.iter().enumerate() {
            for choice in choices {
                for &t in choice {
                    if pred[t].last() != Some(&s) {
                        pred[t].push(s);
                    }
                }
            }
        }
        pred
    }

    /// States with a path into `target` that stays inside `within`.
    fn backward_reach(&self, target: &[bool], within: &[bool]) -> Vec<bool> {
        let pred = self.predecessors();
        let mut seen = target.to_vec();
        let mut stack: Vec<usize> = (0..seen.len()).filter(|&s| seen[s]).collect();
        while let Some(t) = stack.pop() {
            for &s in &pred[t] {
                if !seen[s] && within[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    }

    /// Probability zero under every scheduler: `target` is unreachable.
    pub fn prob0_all(&self, target: &[bool]) -> Vec<bool> {
        let all = vec![true; self.num_states()];
        self.backward_reach(target, &all)
            .into_iter()
            .map(|r| !r)
            .collect()
    }

    /// Some scheduler avoids `target` surely.
    pub fn prob0_exists(&self, target: &[bool]) -> Vec<bool> {
        let mut avoid: Vec<bool> = target.iter().map(|t| !t).collect();
        loop {
            let mut changed = false;
            for s in 0..self.num_states() {
                if avoid[s] && !self.succ[s].iter().any(|c| c.iter().all(|&t| avoid[t])) {
                    avoid[s] = false;
                    changed = true;
                }
            }
            if !changed {
                return avoid;
            }
        }
    }

    /// Probability one under every scheduler.
    pub fn prob1_all(&self, target: &[bool]) -> Vec<bool> {
        let bad = self.prob0_exists(target);
        let outside: Vec<bool> = target.iter().map(|t| !t).collect();
        // states that can be steered with positive probability into `bad`
        let escape = self.backward_reach(&bad, &outside);
        escape.into_iter().map(|e| !e).collect()
    }

    /// Some scheduler reaches `target` with probability one.
    pub fn prob1_exists(&self, target: &[bool]) -> Vec<bool> {
        let n = self.num_states();
        let mut keep = vec![true; n];
        loop {
            let mut reach = target.to_vec();
            loop {
                let mut changed = false;
                for s in 0..n {
                    if reach[s] || !keep[s] {
                        continue;
                    }
                    let ok = self.succ[s].iter().any(|c| {
                        c.iter().all(|&t| keep[t]) && c.iter().any(|&t| reach[t])
                    });
                    if ok {
                        reach[s] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if reach == keep {
                return keep;
            }
            keep = reach;
        }
    }

    /// States from which `target` is reached with positive probability when
    /// states marked in `reacher` pick choices towards it and all others
    /// pick choices away from it.
    pub fn game_positive(&self, target: &[bool], reacher: &[bool]) -> Vec<bool> {
        let mut x = target.to_vec();
        loop {
            let mut changed = false;
            for s in 0..self.num_states() {
                if x[s] {
                    continue;
                }
                let hits = |c: &Vec<usize>| c.iter().any(|&t| x[t]);
                let ok = if reacher[s] {
                    self.succ[s].iter().any(hits)
                } else {
                    self.succ[s].iter().all(hits)
                };
                if ok {
                    x[s] = true;
                    changed = true;
                }
            }
            if !changed {
                return x;
            }
        }
    }

    /// States from which the reachers can force reaching `target` with
    /// probability one.
    pub fn game_almost_sure(&self, target: &[bool], reacher: &[bool]) -> Vec<bool> {
        let n = self.num_states();
        let mut keep = vec![true; n];
        loop {
            let mut reach = target.to_vec();
            loop {
                let mut changed = false;
                for s in 0..n {
                    if reach[s] || !keep[s] {
                        continue;
                    }
                    let progress = |c: &Vec<usize>| c.iter().all(|&t| keep[t]) && c.iter().any(|&t| reach[t]);
                    let ok = if reacher[s] {
                        self.succ[s].iter().any(progress)
                    } else {
                        self.succ[s].iter().all(progress)
                    };
                    if ok {
                        reach[s] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if reach == keep {
                return keep;
            }
            keep = reach;
        }
    }
}

pub(crate) fn mask(n: usize, states: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut m = vec![false; n];
    for s in states {
        m[s] = true;
    }
    m
}
