//! Deterministic finite automata over single-proposition letters, formula
//! translation by progression, and the decomposition of accepting runs into
//! sequential reachability triples.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::ltl::{FiniteWord, Formula, FormulaError, Proposition};

/// Default cap on the alphabet size accepted by [`translate`].
pub const DEFAULT_ALPHABET_CAP: usize = 16;
/// Cap on distinct temporal subformulas; states are truth tables over them.
pub const TEMPORAL_ATOM_CAP: usize = 16;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AutomatonError {
    #[error("alphabet of {size} propositions exceeds the cap of {cap}")]
    AlphabetTooLarge { size: usize, cap: usize },
    #[error("formula has {0} temporal subformulas; at most {TEMPORAL_ATOM_CAP} are supported")]
    FormulaTooLarge(usize),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("run of length {0} has no reachability triples (need at least 2 states)")]
    RunTooShort(usize),
    #[error("DFA text line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dfa {
    names: Vec<String>,
    alphabet: Vec<Proposition>,
    initial: Vec<usize>,
    accepting: Vec<bool>,
    /// `delta[q][letter]`, letters indexed as in `alphabet`.
    delta: Vec<Vec<usize>>,
}

impl Dfa {
    /// Build a DFA; missing transitions (`None`) are routed to a fresh
    /// non-accepting absorbing sink.
    pub fn new(
        names: Vec<String>,
        alphabet: Vec<Proposition>,
        initial: Vec<usize>,
        accepting: Vec<bool>,
        delta: Vec<Vec<Option<usize>>>,
    ) -> Self {
        assert!(!initial.is_empty(), "a DFA needs an initial state");
        assert_eq!(names.len(), accepting.len());
        assert_eq!(names.len(), delta.len());
        let mut names = names;
        let mut accepting = accepting;
        let missing = delta.iter().flatten().any(Option::is_none);
        let sink = names.len();
        let mut total: Vec<Vec<usize>> =
            delta.into_iter().map(|row| row.into_iter().map(|t| t.unwrap_or(sink)).collect()).collect();
        if missing {
            let mut sink_name = "sink".to_string();
            while names.contains(&sink_name) {
                sink_name.push('_');
            }
            names.push(sink_name);
            accepting.push(false);
            total.push(vec![sink; alphabet.len()]);
        }
        Dfa { names, alphabet, initial, accepting, delta: total }
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn alphabet(&self) -> &[Proposition] {
        &self.alphabet
    }

    pub fn name(&self, q: usize) -> &str {
        &self.names[q]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> Vec<usize> {
        (0..self.num_states()).filter(|&q| self.accepting[q]).collect()
    }

    pub fn letter_index(&self, p: &Proposition) -> Option<usize> {
        self.alphabet.iter().position(|a| a == p)
    }

    pub fn step(&self, q: usize, letter: usize) -> usize {
        self.delta[q][letter]
    }

    /// Acceptance of a non-empty word; letters outside the alphabet reject.
    pub fn accepts(&self, word: &FiniteWord) -> bool {
        self.initial.iter().any(|&q0| {
            let mut q = q0;
            for p in word.letters() {
                match self.letter_index(p) {
                    Some(l) => q = self.delta[q][l],
                    None => return false,
                }
            }
            self.accepting[q]
        })
    }

    /// Letters driving `q` to `q2`.
    pub fn labels(&self, q: usize, q2: usize) -> BTreeSet<Proposition> {
        self.alphabet
            .iter()
            .enumerate()
            .filter(|(l, _)| self.delta[q][*l] == q2)
            .map(|(_, p)| p.clone())
            .collect()
    }

    /// Distinct successor states other than `q` itself, ascending.
    pub fn successors(&self, q: usize) -> Vec<usize> {
        let s: BTreeSet<usize> = self.delta[q].iter().copied().filter(|&t| t != q).collect();
        s.into_iter().collect()
    }

    fn has_incoming(&self, q: usize) -> bool {
        self.delta.iter().any(|row| row.contains(&q))
    }

    /// Equivalent automaton in which no initial state has incoming edges,
    /// so the first letter of every word labels a real edge out of the
    /// initial state. Returned unchanged when that already holds.
    pub fn separate_initial(&self) -> Dfa {
        if !self.initial.iter().any(|&q| self.has_incoming(q)) {
            return self.clone();
        }
        let mut out = self.clone();
        let mut new_initial = Vec::new();
        for &q in &self.initial {
            if !self.has_incoming(q) {
                new_initial.push(q);
                continue;
            }
            let id = out.names.len();
            let mut name = format!("{}_init", self.names[q]);
            while out.names.contains(&name) {
                name.push('_');
            }
            out.names.push(name);
            out.accepting.push(self.accepting[q]);
            out.delta.push(self.delta[q].clone());
            new_initial.push(id);
        }
        out.initial = new_initial;
        out.prune_unreachable().canonical()
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut queue: VecDeque<usize> = self.initial.iter().copied().collect();
        for &q in &self.initial {
            seen[q] = true;
        }
        while let Some(q) = queue.pop_front() {
            for &t in &self.delta[q] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    fn prune_unreachable(&self) -> Dfa {
        let seen = self.reachable();
        if seen.iter().all(|&s| s) {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.num_states()).filter(|&q| seen[q]).collect();
        let index: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        Dfa {
            names: keep.iter().map(|&q| self.names[q].clone()).collect(),
            alphabet: self.alphabet.clone(),
            initial: self.initial.iter().map(|q| index[q]).collect(),
            accepting: keep.iter().map(|&q| self.accepting[q]).collect(),
            delta: keep.iter().map(|&q| self.delta[q].iter().map(|t| index[t]).collect()).collect(),
        }
    }

    /// Renumber states in breadth-first order from the initial states
    /// (letters in alphabet order) and name them `q0, q1, ...`.
    pub fn canonical(&self) -> Dfa {
        let mut order = Vec::with_capacity(self.num_states());
        let mut index = vec![usize::MAX; self.num_states()];
        let mut queue = VecDeque::new();
        for &q in &self.initial {
            if index[q] == usize::MAX {
                index[q] = order.len();
                order.push(q);
                queue.push_back(q);
            }
        }
        while let Some(q) = queue.pop_front() {
            for &t in &self.delta[q] {
                if index[t] == usize::MAX {
                    index[t] = order.len();
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        Dfa {
            names: (0..order.len()).map(|i| format!("q{i}")).collect(),
            alphabet: self.alphabet.clone(),
            initial: self.initial.iter().map(|&q| index[q]).collect(),
            accepting: order.iter().map(|&q| self.accepting[q]).collect(),
            delta: order.iter().map(|&q| self.delta[q].iter().map(|&t| index[t]).collect()).collect(),
        }
    }

    /// Hopcroft partition refinement; unreachable states are dropped first.
    pub fn minimize(&self) -> Dfa {
        let dfa = self.prune_unreachable();
        let n = dfa.num_states();
        let k = dfa.alphabet.len();
        let mut inverse = vec![vec![Vec::new(); n]; k];
        for q in 0..n {
            for l in 0..k {
                inverse[l][dfa.delta[q][l]].push(q);
            }
        }
        let acc: Vec<usize> = (0..n).filter(|&q| dfa.accepting[q]).collect();
        let rej: Vec<usize> = (0..n).filter(|&q| !dfa.accepting[q]).collect();
        let mut blocks: Vec<Vec<usize>> = [acc, rej].into_iter().filter(|b| !b.is_empty()).collect();
        let mut block_of = vec![0usize; n];
        for (b, members) in blocks.iter().enumerate() {
            for &q in members {
                block_of[q] = b;
            }
        }
        let mut work: Vec<(usize, usize)> = Vec::new();
        let smallest = (0..blocks.len()).min_by_key(|&b| blocks[b].len());
        if let Some(b) = smallest {
            for l in 0..k {
                work.push((b, l));
            }
        }
        let mut in_work: BTreeSet<(usize, usize)> = work.iter().copied().collect();
        while let Some((splitter, letter)) = work.pop() {
            in_work.remove(&(splitter, letter));
            let mut hit = vec![false; n];
            for &t in &blocks[splitter] {
                for &p in &inverse[letter][t] {
                    hit[p] = true;
                }
            }
            let touched: BTreeSet<usize> = (0..n).filter(|&q| hit[q]).map(|q| block_of[q]).collect();
            for b in touched {
                let (inside, outside): (Vec<usize>, Vec<usize>) = blocks[b].iter().partition(|&&q| hit[q]);
                if inside.is_empty() || outside.is_empty() {
                    continue;
                }
                let new_id = blocks.len();
                let (keep, moved) = if inside.len() <= outside.len() { (outside, inside) } else { (inside, outside) };
                for &q in &moved {
                    block_of[q] = new_id;
                }
                blocks[b] = keep;
                blocks.push(moved);
                for l in 0..k {
                    if in_work.contains(&(b, l)) {
                        work.push((new_id, l));
                        in_work.insert((new_id, l));
                    } else {
                        // the moved half is the smaller one
                        work.push((new_id, l));
                        in_work.insert((new_id, l));
                    }
                }
            }
        }
        let m = blocks.len();
        let names = (0..m).map(|b| format!("q{b}")).collect();
        let accepting = (0..m).map(|b| dfa.accepting[blocks[b][0]]).collect();
        let delta = (0..m)
            .map(|b| (0..k).map(|l| block_of[dfa.delta[blocks[b][0]][l]]).collect())
            .collect();
        let initial: BTreeSet<usize> = dfa.initial.iter().map(|&q| block_of[q]).collect();
        Dfa { names, alphabet: dfa.alphabet.clone(), initial: initial.into_iter().collect(), accepting, delta }
            .canonical()
    }

    /// State bijection `self -> other` preserving initial state, acceptance and
    /// transitions, if one exists. Both automata need a single initial state
    /// and identical alphabets.
    pub fn isomorphism(&self, other: &Dfa) -> Option<Vec<usize>> {
        if self.num_states() != other.num_states()
            || self.alphabet != other.alphabet
            || self.initial.len() != 1
            || other.initial.len() != 1
        {
            return None;
        }
        let mut map = vec![usize::MAX; self.num_states()];
        let mut used = vec![false; other.num_states()];
        let mut queue = VecDeque::new();
        map[self.initial[0]] = other.initial[0];
        used[other.initial[0]] = true;
        queue.push_back(self.initial[0]);
        while let Some(q) = queue.pop_front() {
            let q2 = map[q];
            if self.accepting[q] != other.accepting[q2] {
                return None;
            }
            for l in 0..self.alphabet.len() {
                let (t, t2) = (self.delta[q][l], other.delta[q2][l]);
                if map[t] == usize::MAX {
                    if used[t2] {
                        return None;
                    }
                    map[t] = t2;
                    used[t2] = true;
                    queue.push_back(t);
                } else if map[t] != t2 {
                    return None;
                }
            }
        }
        if map.contains(&usize::MAX) {
            return None;
        }
        Some(map)
    }

    /// Line-oriented text form: `states:`, `alphabet:`, `initial:`,
    /// `accepting:` and one `trans: <from> <letter> <to>` per transition.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("states: {}\n", self.names.join(" ")));
        let alpha: Vec<&str> = self.alphabet.iter().map(Proposition::name).collect();
        s.push_str(&format!("alphabet: {}\n", alpha.join(" ")));
        let init: Vec<&str> = self.initial.iter().map(|&q| self.names[q].as_str()).collect();
        s.push_str(&format!("initial: {}\n", init.join(" ")));
        let acc: Vec<&str> = self.accepting_states().into_iter().map(|q| self.names[q].as_str()).collect();
        s.push_str(&format!("accepting: {}\n", acc.join(" ")).replace(": \n", ":\n"));
        for q in 0..self.num_states() {
            for (l, p) in self.alphabet.iter().enumerate() {
                s.push_str(&format!("trans: {} {} {}\n", self.names[q], p, self.names[self.delta[q][l]]));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Dfa, AutomatonError> {
        let err = |line: usize, message: String| AutomatonError::Format { line, message };
        let mut names: Option<Vec<String>> = None;
        let mut alphabet: Option<Vec<Proposition>> = None;
        let mut initial: Vec<String> = Vec::new();
        let mut accepting: Vec<String> = Vec::new();
        let mut trans: Vec<(usize, String, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| err(line_no, "expected 'key: value'".into()))?;
            let items: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            match key.trim() {
                "states" => names = Some(items),
                "alphabet" => {
                    let props = items
                        .iter()
                        .map(|s| Proposition::new(s))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| err(line_no, e.to_string()))?;
                    alphabet = Some(props);
                }
                "initial" => initial.extend(items),
                "accepting" => accepting.extend(items),
                "trans" => {
                    if items.len() != 3 {
                        return Err(err(line_no, "expected 'trans: <from> <letter> <to>'".into()));
                    }
                    trans.push((line_no, items[0].clone(), items[1].clone(), items[2].clone()));
                }
                other => return Err(err(line_no, format!("unknown key '{other}'"))),
            }
        }
        let names = names.ok_or_else(|| err(0, "missing 'states:' line".into()))?;
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        if index.len() != names.len() {
            return Err(err(0, "duplicate state names".into()));
        }
        let alphabet = match alphabet {
            Some(a) => a,
            None => {
                let set = trans
                    .iter()
                    .map(|(l, _, p, _)| Proposition::new(p).map_err(|e| err(*l, e.to_string())))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                set.into_iter().collect()
            }
        };
        let lookup = |line: usize, s: &str| index.get(s).copied().ok_or_else(|| err(line, format!("unknown state '{s}'")));
        let initial = initial.iter().map(|s| lookup(0, s)).collect::<Result<Vec<_>, _>>()?;
        if initial.is_empty() {
            return Err(err(0, "missing 'initial:' line".into()));
        }
        let mut acc = vec![false; names.len()];
        for s in &accepting {
            acc[lookup(0, s)?] = true;
        }
        let mut delta = vec![vec![None; alphabet.len()]; names.len()];
        for (line, from, letter, to) in &trans {
            let q = lookup(*line, from)?;
            let t = lookup(*line, to)?;
            let p = Proposition::new(letter).map_err(|e| err(*line, e.to_string()))?;
            let l = alphabet
                .iter()
                .position(|a| *a == p)
                .ok_or_else(|| err(*line, format!("letter '{letter}' not in alphabet")))?;
            match delta[q][l] {
                Some(prev) if prev != t => {
                    return Err(err(*line, format!("nondeterministic transition from '{from}' on '{letter}'")))
                }
                _ => delta[q][l] = Some(t),
            }
        }
        Ok(Dfa::new(names, alphabet, initial, acc, delta))
    }
}

/// Truth table of a positive Boolean combination of temporal subformulas.
type Table = Vec<bool>;

struct Progression {
    atoms: Vec<Formula>,
    index: BTreeMap<Formula, usize>,
}

impl Progression {
    fn new(f: &Formula) -> Self {
        let mut p = Progression { atoms: Vec::new(), index: BTreeMap::new() };
        p.collect(f);
        p
    }

    fn collect(&mut self, f: &Formula) {
        match f {
            Formula::True | Formula::Atom(_) | Formula::Not(_) => {}
            Formula::And(a, b) | Formula::Or(a, b) => {
                self.collect(a);
                self.collect(b);
            }
            Formula::Always(a) | Formula::Eventually(a) => {
                self.register(f);
                self.collect(a);
            }
            Formula::Until(a, b) => {
                self.register(f);
                self.collect(a);
                self.collect(b);
            }
        }
    }

    fn register(&mut self, f: &Formula) {
        if !self.index.contains_key(f) {
            self.index.insert(f.clone(), self.atoms.len());
            self.atoms.push(f.clone());
        }
    }

    fn size(&self) -> usize {
        1 << self.atoms.len()
    }

    fn constant(&self, v: bool) -> Table {
        vec![v; self.size()]
    }

    fn var(&self, i: usize) -> Table {
        (0..self.size()).map(|v| (v >> i) & 1 == 1).collect()
    }

    /// Residual obligation on the suffix after reading `letter`, in PNF input.
    fn progress(&self, f: &Formula, letter: &Proposition) -> Table {
        let and = |a: Table, b: Table| a.iter().zip(&b).map(|(x, y)| *x && *y).collect::<Table>();
        let or = |a: Table, b: Table| a.iter().zip(&b).map(|(x, y)| *x || *y).collect::<Table>();
        match f {
            Formula::True => self.constant(true),
            Formula::Atom(p) => self.constant(p == letter),
            Formula::Not(a) => match &**a {
                Formula::True => self.constant(false),
                Formula::Atom(p) => self.constant(p != letter),
                _ => unreachable!("progression expects positive normal form"),
            },
            Formula::And(a, b) => and(self.progress(a, letter), self.progress(b, letter)),
            Formula::Or(a, b) => or(self.progress(a, letter), self.progress(b, letter)),
            Formula::Always(a) => and(self.progress(a, letter), self.var(self.index[f])),
            Formula::Eventually(a) => or(self.progress(a, letter), self.var(self.index[f])),
            Formula::Until(a, b) => or(
                self.progress(b, letter),
                and(self.progress(a, letter), self.var(self.index[f])),
            ),
        }
    }

    /// Valuation of the temporal atoms on the empty suffix.
    fn end_valuation(&self) -> usize {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a, Formula::Always(_)))
            .fold(0, |v, (i, _)| v | (1 << i))
    }

    /// Empty-trace value of an unprogressed formula; literals count as false.
    fn empty_value(f: &Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::Atom(_) | Formula::Not(_) => false,
            Formula::And(a, b) => Self::empty_value(a) && Self::empty_value(b),
            Formula::Or(a, b) => Self::empty_value(a) || Self::empty_value(b),
            Formula::Always(_) => true,
            Formula::Eventually(_) | Formula::Until(..) => false,
        }
    }
}

/// Translate a formula into a minimal DFA over `alphabet` accepting exactly
/// the non-empty words that satisfy it.
pub fn translate(f: &Formula, alphabet: &[Proposition]) -> Result<Dfa, AutomatonError> {
    translate_with_cap(f, alphabet, DEFAULT_ALPHABET_CAP)
}

pub fn translate_with_cap(f: &Formula, alphabet: &[Proposition], cap: usize) -> Result<Dfa, AutomatonError> {
    let alphabet: Vec<Proposition> = alphabet.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if alphabet.len() > cap {
        return Err(AutomatonError::AlphabetTooLarge { size: alphabet.len(), cap });
    }
    if let Some(p) = f.atoms().into_iter().find(|p| !alphabet.contains(p)) {
        return Err(FormulaError::UnknownProposition(p.to_string()).into());
    }
    let f = f.to_pnf();
    let prog = Progression::new(&f);
    if prog.atoms.len() > TEMPORAL_ATOM_CAP {
        return Err(AutomatonError::FormulaTooLarge(prog.atoms.len()));
    }
    let k = prog.atoms.len();
    let size = prog.size();
    // progressed[atom][letter]: residual of each temporal atom
    let progressed: Vec<Vec<Table>> = prog
        .atoms
        .iter()
        .map(|a| alphabet.iter().map(|l| prog.progress(a, l)).collect())
        .collect();
    let end = prog.end_valuation();

    // state 0 is the initial state, before any letter is read
    let mut tables: Vec<Table> = Vec::new();
    let mut ids: HashMap<Table, usize> = HashMap::new();
    let mut delta: Vec<Vec<Option<usize>>> = vec![vec![None; alphabet.len()]];
    let mut accepting = vec![Progression::empty_value(&f)];
    let mut queue = VecDeque::new();

    let mut intern = |t: Table,
                      tables: &mut Vec<Table>,
                      delta: &mut Vec<Vec<Option<usize>>>,
                      accepting: &mut Vec<bool>,
                      queue: &mut VecDeque<usize>|
     -> usize {
        if let Some(&id) = ids.get(&t) {
            return id;
        }
        let id = tables.len() + 1;
        accepting.push(t[end]);
        ids.insert(t.clone(), id);
        tables.push(t);
        delta.push(vec![None; alphabet.len()]);
        queue.push_back(id);
        id
    };

    for (l, letter) in alphabet.iter().enumerate() {
        let t = prog.progress(&f, letter);
        let id = intern(t, &mut tables, &mut delta, &mut accepting, &mut queue);
        delta[0][l] = Some(id);
    }
    while let Some(id) = queue.pop_front() {
        for l in 0..alphabet.len() {
            let current = &tables[id - 1];
            let next: Table = (0..size)
                .map(|v| {
                    let w = (0..k).fold(0usize, |w, i| if progressed[i][l][v] { w | (1 << i) } else { w });
                    current[w]
                })
                .collect();
            let nid = intern(next, &mut tables, &mut delta, &mut accepting, &mut queue);
            delta[id][l] = Some(nid);
        }
    }
    let n = delta.len();
    let names = (0..n).map(|i| format!("s{i}")).collect();
    Ok(Dfa::new(names, alphabet, vec![0], accepting, delta).minimize())
}

/// State sequence `(q0, ..., qn)` with `n >= 1`, no self-loop steps.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AcceptingRun(pub Vec<usize>);

impl AcceptingRun {
    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn display<'a>(&'a self, dfa: &'a Dfa) -> impl fmt::Display + 'a {
        StateTuple(&self.0, dfa)
    }
}

/// Consecutive state triple `(q, q', q'')` of an accepting run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReachTriple(pub [usize; 3]);

impl ReachTriple {
    /// Letters of the entering edge `q -> q'`.
    pub fn source_labels(&self, dfa: &Dfa) -> BTreeSet<Proposition> {
        dfa.labels(self.0[0], self.0[1])
    }

    /// Letters of the edge `q' -> q''`.
    pub fn target_labels(&self, dfa: &Dfa) -> BTreeSet<Proposition> {
        dfa.labels(self.0[1], self.0[2])
    }

    pub fn display<'a>(&'a self, dfa: &'a Dfa) -> impl fmt::Display + 'a {
        StateTuple(&self.0, dfa)
    }

    pub fn name(&self, dfa: &Dfa) -> String {
        self.display(dfa).to_string()
    }
}

struct StateTuple<'a>(&'a [usize], &'a Dfa);

impl fmt::Display for StateTuple<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, &q) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(self.1.name(q))?;
        }
        f.write_str(")")
    }
}

/// All accepting runs without self-loop steps, by depth-first search.
/// Each state may occur at most `1 + allow_revisits` times in a run.
pub fn accepting_runs(dfa: &Dfa, allow_revisits: usize) -> Vec<AcceptingRun> {
    let mut out = Vec::new();
    let mut visits = vec![0usize; dfa.num_states()];
    let limit = 1 + allow_revisits;
    let mut path = Vec::new();
    for &q0 in dfa.initial() {
        dfs(dfa, q0, limit, &mut visits, &mut path, &mut out);
    }
    out
}

fn dfs(
    dfa: &Dfa,
    q: usize,
    limit: usize,
    visits: &mut [usize],
    path: &mut Vec<usize>,
    out: &mut Vec<AcceptingRun>,
) {
    path.push(q);
    visits[q] += 1;
    if path.len() >= 2 && dfa.is_accepting(q) {
        out.push(AcceptingRun(path.clone()));
    }
    for t in dfa.successors(q) {
        if visits[t] < limit {
            dfs(dfa, t, limit, visits, path, out);
        }
    }
    visits[q] -= 1;
    path.pop();
}

/// Runs whose first edge can be driven by `p`.
pub fn runs_by_proposition(dfa: &Dfa, runs: &[AcceptingRun], p: &Proposition) -> Vec<AcceptingRun> {
    runs.iter()
        .filter(|r| r.len() >= 2 && dfa.labels(r.0[0], r.0[1]).contains(p))
        .cloned()
        .collect()
}

/// Length-3 windows of a run; empty for runs of two states.
pub fn triples(run: &AcceptingRun) -> Result<Vec<ReachTriple>, AutomatonError> {
    if run.len() < 2 {
        return Err(AutomatonError::RunTooShort(run.len()));
    }
    Ok(run.0.windows(3).map(|w| ReachTriple([w[0], w[1], w[2]])).collect())
}

#[derive(Clone, Debug)]
pub struct RunEntry {
    pub run: AcceptingRun,
    pub triples: Vec<ReachTriple>,
}

/// Accepting runs grouped by the proposition of their first edge.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub dfa: Dfa,
    pub runs: Vec<AcceptingRun>,
    pub by_prop: BTreeMap<Proposition, Vec<RunEntry>>,
}

impl Decomposition {
    pub fn build(dfa: &Dfa, allow_revisits: usize) -> Decomposition {
        let runs = accepting_runs(dfa, allow_revisits);
        let by_prop = dfa
            .alphabet()
            .iter()
            .map(|p| {
                let entries = runs_by_proposition(dfa, &runs, p)
                    .into_iter()
                    .map(|run| {
                        let triples = triples(&run).expect("accepting runs have at least two states");
                        RunEntry { run, triples }
                    })
                    .collect();
                (p.clone(), entries)
            })
            .collect();
        Decomposition { dfa: dfa.clone(), runs, by_prop }
    }

    /// Distinct triples over all propositions, in first-seen order.
    pub fn unique_triples(&self) -> Vec<ReachTriple> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for entries in self.by_prop.values() {
            for e in entries {
                for t in &e.triples {
                    if seen.insert(*t) {
                        out.push(*t);
                    }
                }
            }
        }
        out
    }

    /// Text listing of the run set, the per-proposition run sets and the
    /// per-run triple sets.
    pub fn render(&self) -> String {
        let dfa = &self.dfa;
        let join_runs = |runs: &[AcceptingRun]| {
            runs.iter().map(|r| r.display(dfa).to_string()).collect::<Vec<_>>().join(", ")
        };
        let mut s = format!("R = {{{}}}\n", join_runs(&self.runs));
        for (p, entries) in &self.by_prop {
            let runs: Vec<AcceptingRun> = entries.iter().map(|e| e.run.clone()).collect();
            s.push_str(&format!("R^{p} = {{{}}}\n", join_runs(&runs)));
        }
        for (p, entries) in &self.by_prop {
            for e in entries {
                let ts: Vec<String> = e.triples.iter().map(|t| t.name(dfa)).collect();
                s.push_str(&format!("P^{p}{} = {{{}}}\n", e.run.display(dfa), ts.join(", ")));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::enumerate_words;

    fn props(names: &[&str]) -> Vec<Proposition> {
        names.iter().map(|n| Proposition::new(n).unwrap()).collect()
    }

    #[test]
    fn safety_automaton_has_two_states() {
        let f = Formula::parse("G !p1").unwrap();
        let d = translate(&f, &props(&["p0", "p1"])).unwrap();
        assert_eq!(d.num_states(), 2);
        let live = d.initial()[0];
        assert!(d.is_accepting(live));
        let p0 = d.letter_index(&props(&["p0"])[0]).unwrap();
        let p1 = d.letter_index(&props(&["p1"])[0]).unwrap();
        assert_eq!(d.step(live, p0), live);
        let sink = d.step(live, p1);
        assert_ne!(sink, live);
        assert!(!d.is_accepting(sink));
        assert_eq!(d.step(sink, p0), sink);
        assert_eq!(d.step(sink, p1), sink);
    }

    #[test]
    fn true_is_single_accepting_state() {
        let d = translate(&Formula::True, &props(&["p0", "p1"])).unwrap();
        assert_eq!(d.num_states(), 1);
        assert!(d.is_accepting(0));
        assert_eq!(d.successors(0), Vec::<usize>::new());
    }

    #[test]
    fn alphabet_cap() {
        let names: Vec<String> = (0..17).map(|i| format!("p{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let err = translate(&Formula::True, &props(&refs)).unwrap_err();
        assert_eq!(err, AutomatonError::AlphabetTooLarge { size: 17, cap: 16 });
    }

    #[test]
    fn unknown_atom_rejected() {
        let f = Formula::parse("G !p9").unwrap();
        assert!(matches!(translate(&f, &props(&["p0"])), Err(AutomatonError::Formula(_))));
    }

    #[test]
    fn self_loop_only_dfa_has_no_runs() {
        let d = Dfa::new(vec!["q0".into()], props(&["p0"]), vec![0], vec![true], vec![vec![Some(0)]]);
        assert!(accepting_runs(&d, 0).is_empty());
    }

    #[test]
    fn safety_dfa_runs() {
        // live --p1--> sink, sink accepting
        let d = Dfa::new(
            vec!["live".into(), "sink".into()],
            props(&["p0", "p1"]),
            vec![0],
            vec![false, true],
            vec![vec![Some(0), Some(1)], vec![Some(1), Some(1)]],
        );
        let runs = accepting_runs(&d, 0);
        assert_eq!(runs, vec![AcceptingRun(vec![0, 1])]);
        assert!(triples(&runs[0]).unwrap().is_empty());
        assert!(runs_by_proposition(&d, &[], &props(&["p0"])[0]).is_empty());
    }

    #[test]
    fn triples_of_runs() {
        assert_eq!(
            triples(&AcceptingRun(vec![0, 1, 2, 3])).unwrap(),
            vec![ReachTriple([0, 1, 2]), ReachTriple([1, 2, 3])]
        );
        assert!(triples(&AcceptingRun(vec![0, 3])).unwrap().is_empty());
        assert_eq!(triples(&AcceptingRun(vec![0, 4, 3])).unwrap(), vec![ReachTriple([0, 4, 3])]);
        assert_eq!(triples(&AcceptingRun(vec![0])), Err(AutomatonError::RunTooShort(1)));
    }

    #[test]
    fn missing_transitions_go_to_sink() {
        let d = Dfa::from_text("states: a b\ninitial: a\naccepting: b\ntrans: a p0 b\n").unwrap();
        assert_eq!(d.num_states(), 3);
        assert_eq!(d.name(2), "sink");
        assert!(d.accepts(&FiniteWord::from_names(&["p0"]).unwrap()));
        assert!(!d.accepts(&FiniteWord::from_names(&["p0", "p0"]).unwrap()));
    }

    #[test]
    fn text_format_errors() {
        assert!(Dfa::from_text("initial: a\n").is_err());
        assert!(Dfa::from_text("states: a\ninitial: b\n").is_err());
        assert!(Dfa::from_text("states: a b\ninitial: a\ntrans: a p0 a\ntrans: a p0 b\n").is_err());
        assert!(Dfa::from_text("states: a\ninitial: a\nfoo: bar\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let f = Formula::parse("(p0 & (G !p1 | G !p2)) | (p2 & G !p1)").unwrap().negate_to_pnf();
        let d = translate(&f, &props(&["p0", "p1", "p2", "p3"])).unwrap();
        let back = Dfa::from_text(&d.to_text()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn separate_initial_splits_reentered_start() {
        let f = Formula::parse("F p1").unwrap();
        let d = translate(&f, &props(&["p0", "p1", "p2"])).unwrap();
        assert_eq!(d.num_states(), 2);
        let s = d.separate_initial();
        assert_eq!(s.num_states(), 3);
        for w in enumerate_words(s.alphabet(), 4) {
            assert_eq!(s.accepts(&w), d.accepts(&w));
        }
        let dec = Decomposition::build(&s, 0);
        let p0 = &dec.by_prop[&props(&["p0"])[0]];
        assert_eq!(p0.len(), 1);
        assert_eq!(p0[0].triples.len(), 1);
        let p1 = &dec.by_prop[&props(&["p1"])[0]];
        assert_eq!(p1.len(), 1);
        assert!(p1[0].triples.is_empty());
        // already separated: unchanged
        assert_eq!(s.separate_initial(), s);
    }

    #[test]
    fn minimization_merges_equivalent_states() {
        // two copies of an accept-all state
        let d = Dfa::new(
            vec!["a".into(), "b".into(), "c".into()],
            props(&["p0"]),
            vec![0],
            vec![false, true, true],
            vec![vec![Some(1)], vec![Some(2)], vec![Some(1)]],
        );
        let m = d.minimize();
        assert_eq!(m.num_states(), 2);
    }

    #[test]
    fn revisit_budget_admits_cycles() {
        // a <-> b, b -> c accepting
        let d = Dfa::new(
            vec!["a".into(), "b".into(), "c".into()],
            props(&["x", "y"]),
            vec![0],
            vec![false, false, true],
            vec![vec![Some(1), Some(0)], vec![Some(0), Some(2)], vec![Some(2), Some(2)]],
        );
        assert_eq!(accepting_runs(&d, 0), vec![AcceptingRun(vec![0, 1, 2])]);
        let runs = accepting_runs(&d, 1);
        assert!(runs.contains(&AcceptingRun(vec![0, 1, 0, 1, 2])));
        assert_eq!(runs.len(), 2);
    }
}
