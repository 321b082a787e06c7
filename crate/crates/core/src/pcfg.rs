//! k-best CYK parsing, rule-probability training and the two-pass dominant
//! pattern resolver.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::ColumnSample;
use crate::dateparse::column_error_rate;
use crate::detection::{Candidate, DetectError, DetectOptions, DetectionResult, Engine, Timing};
use crate::grammar::{binarize, build_datetime_grammar, lex, Grammar, Guard, LexedToken, Sem, Symbol};
use crate::icu::{normalize_for_comparison, tokenize_format, FormatString, FormatToken};
use crate::locale::Locale;

pub const DEFAULT_K: usize = 16;
/// Probability given to rules never seen in training, before renormalizing.
pub const SMOOTHING_FLOOR: f64 = 1e-6;
/// Relative difference below which two tree probabilities count as tied.
pub const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcfgError {
    #[error("no parse")]
    NoParse,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("leaf at token {token} has no format equivalent")]
    UntranslatableLeaf { token: usize },
}

/// A derivation in terms of the grammar's source rules.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TreeNode {
    Node { rule: usize, children: Vec<TreeNode> },
    Leaf { terminal: u16, token: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseTree {
    pub root: TreeNode,
    pub probability: f64,
}

impl TreeNode {
    /// Source rule ids in preorder.
    pub fn rules_preorder(&self, out: &mut Vec<usize>) {
        if let TreeNode::Node { rule, children } = self {
            out.push(*rule);
            for c in children {
                c.rules_preorder(out);
            }
        }
    }
}

/// Product of the source-rule probabilities used in `node`.
pub fn tree_probability(node: &TreeNode, g: &Grammar) -> f64 {
    let mut rules = Vec::new();
    node.rules_preorder(&mut rules);
    rules.iter().map(|&r| g.source_rules()[r].probability).product()
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Leaf { terminal: u16, token: u32 },
    Unary { rule: u32, child: u32 },
    Binary { rule: u32, left: u32, right: u32 },
}

#[derive(Debug, Clone, Copy)]
struct Item {
    prob: f64,
    sem: Sem,
    kind: Kind,
}

/// A binarized grammar indexed for chart parsing.
pub struct CykParser<'g> {
    g: &'g Grammar,
    n_nt: usize,
    n_sym: usize,
    binary_by_left: Vec<Vec<u32>>,
    lexical: Vec<u32>,
    unary: Vec<u32>,
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_EPSILON * a.abs().max(b.abs())
}

impl<'g> CykParser<'g> {
    pub fn new(g: &'g Grammar) -> CykParser<'g> {
        assert!(g.is_binary(), "CYK needs a binarized grammar");
        let n_nt = g.nonterminal_count();
        let n_sym = n_nt + g.terminals().len();
        let mut binary_by_left = vec![Vec::new(); n_sym];
        let mut lexical = Vec::new();
        for (i, r) in g.rules().iter().enumerate() {
            match r.rhs.as_slice() {
                [left, _] => binary_by_left[sym_index(n_nt, *left)].push(i as u32),
                [Symbol::T(_)] => lexical.push(i as u32),
                _ => {}
            }
        }
        let unary = g
            .unary_order()
            .expect("grammar was validated on construction")
            .into_iter()
            .map(|i| i as u32)
            .collect();
        CykParser {
            g,
            n_nt,
            n_sym,
            binary_by_left,
            lexical,
            unary,
        }
    }

    fn origin(&self, rule: u32) -> usize {
        self.g.rules()[rule as usize].origin
    }

    /// Preorder comparison of source-rule ids.
    fn preorder_cmp(&self, arena: &[Item], a: u32, b: u32) -> Ordering {
        match (arena[a as usize].kind, arena[b as usize].kind) {
            (Kind::Leaf { terminal: x, .. }, Kind::Leaf { terminal: y, .. }) => x.cmp(&y),
            (Kind::Unary { rule: r1, child: c1 }, Kind::Unary { rule: r2, child: c2 }) => self
                .origin(r1)
                .cmp(&self.origin(r2))
                .then_with(|| self.preorder_cmp(arena, c1, c2)),
            (
                Kind::Binary { rule: r1, left: l1, right: q1 },
                Kind::Binary { rule: r2, left: l2, right: q2 },
            ) => self
                .origin(r1)
                .cmp(&self.origin(r2))
                .then_with(|| self.preorder_cmp(arena, l1, l2))
                .then_with(|| self.preorder_cmp(arena, q1, q2)),
            (ka, kb) => {
                let rule_of = |k: Kind| match k {
                    Kind::Leaf { .. } => 0,
                    Kind::Unary { rule, .. } | Kind::Binary { rule, .. } => self.origin(rule) + 1,
                };
                rule_of(ka).cmp(&rule_of(kb))
            }
        }
    }

    fn rank_cmp(&self, arena: &[Item], a: u32, b: u32) -> Ordering {
        let (pa, pb) = (arena[a as usize].prob, arena[b as usize].prob);
        if tied(pa, pb) {
            self.preorder_cmp(arena, a, b)
        } else {
            pb.total_cmp(&pa)
        }
    }

    /// Adds `item` to a ranked list capped at `k`.
    fn offer(&self, arena: &mut Vec<Item>, list: &mut Vec<u32>, item: Item, k: usize) {
        if list.len() == k {
            let worst = arena[*list.last().unwrap() as usize].prob;
            if item.prob < worst && !tied(item.prob, worst) {
                return;
            }
        }
        let id = arena.len() as u32;
        arena.push(item);
        let pos = list
            .iter()
            .position(|&other| self.rank_cmp(arena, id, other) == Ordering::Less)
            .unwrap_or(list.len());
        if pos >= k {
            arena.pop();
            return;
        }
        list.insert(pos, id);
        list.truncate(k);
    }

    fn passes(&self, rule: u32, sem: &Sem) -> bool {
        match self.g.rules()[rule as usize].guard {
            Some(Guard::Calendar) => sem.calendar_ok(),
            None => true,
        }
    }

    /// Up to `k` parses rooted at the start symbol, best first.
    pub fn parse(&self, tokens: &[LexedToken<'_>], k: usize) -> Result<Vec<ParseTree>, PcfgError> {
        let n = tokens.len();
        if n == 0 || k == 0 {
            return Err(PcfgError::NoParse);
        }
        let idx = |i: usize, j: usize| i * (n + 1) + j;
        let mut cells: Vec<Vec<Vec<u32>>> = vec![Vec::new(); (n + 1) * (n + 1)];
        let mut present: Vec<Vec<usize>> = vec![Vec::new(); (n + 1) * (n + 1)];
        let mut arena: Vec<Item> = Vec::new();
        let rules = self.g.rules();

        for len in 1..=n {
            for i in 0..=n - len {
                let j = i + len;
                let mut cell: Vec<Vec<u32>> = vec![Vec::new(); self.n_sym];
                if len == 1 {
                    for t in 0..self.g.terminals().len() as u16 {
                        if let Some(sem) = self.g.terminal_accepts(t, &tokens[i]) {
                            cell[self.n_nt + t as usize].push(arena.len() as u32);
                            arena.push(Item {
                                prob: 1.0,
                                sem,
                                kind: Kind::Leaf { terminal: t, token: i as u32 },
                            });
                        }
                    }
                    for &r in &self.lexical {
                        let rule = &rules[r as usize];
                        let child_list = &cell[sym_index(self.n_nt, rule.rhs[0])];
                        if let Some(&c) = child_list.first() {
                            let item = Item {
                                prob: rule.probability,
                                sem: arena[c as usize].sem,
                                kind: Kind::Unary { rule: r, child: c },
                            };
                            if self.passes(r, &item.sem) {
                                let mut list = std::mem::take(&mut cell[rule.lhs as usize]);
                                self.offer(&mut arena, &mut list, item, k);
                                cell[rule.lhs as usize] = list;
                            }
                        }
                    }
                } else {
                    for m in i + 1..j {
                        let (l, rr) = (idx(i, m), idx(m, j));
                        for &ls in &present[l] {
                            for &r in &self.binary_by_left[ls] {
                                let rule = &rules[r as usize];
                                let rs = sym_index(self.n_nt, rule.rhs[1]);
                                let right = &cells[rr][rs];
                                if right.is_empty() {
                                    continue;
                                }
                                let mut list = std::mem::take(&mut cell[rule.lhs as usize]);
                                for &a in &cells[l][ls] {
                                    for &b in right {
                                        let (ia, ib) = (arena[a as usize], arena[b as usize]);
                                        let prob = rule.probability * ia.prob * ib.prob;
                                        if list.len() == k {
                                            let worst = arena[*list.last().unwrap() as usize].prob;
                                            if prob < worst && !tied(prob, worst) {
                                                // Both child lists are sorted, so the rest of this
                                                // row is no better.
                                                break;
                                            }
                                        }
                                        let sem = ia.sem.merge(ib.sem);
                                        if !self.passes(r, &sem) {
                                            continue;
                                        }
                                        let item = Item {
                                            prob,
                                            sem,
                                            kind: Kind::Binary { rule: r, left: a, right: b },
                                        };
                                        self.offer(&mut arena, &mut list, item, k);
                                    }
                                }
                                cell[rule.lhs as usize] = list;
                            }
                        }
                    }
                }
                for &r in &self.unary {
                    let rule = &rules[r as usize];
                    let children = cell[sym_index(self.n_nt, rule.rhs[0])].clone();
                    if children.is_empty() {
                        continue;
                    }
                    let mut list = std::mem::take(&mut cell[rule.lhs as usize]);
                    for c in children {
                        let ic = arena[c as usize];
                        if !self.passes(r, &ic.sem) {
                            continue;
                        }
                        let item = Item {
                            prob: rule.probability * ic.prob,
                            sem: ic.sem,
                            kind: Kind::Unary { rule: r, child: c },
                        };
                        self.offer(&mut arena, &mut list, item, k);
                    }
                    cell[rule.lhs as usize] = list;
                }
                present[idx(i, j)] = (0..self.n_sym).filter(|&s| !cell[s].is_empty()).collect();
                cells[idx(i, j)] = cell;
            }
        }

        let roots = &cells[idx(0, n)][self.g.start() as usize];
        if roots.is_empty() {
            return Err(PcfgError::NoParse);
        }
        Ok(roots
            .iter()
            .map(|&id| ParseTree {
                root: self.build(&arena, id),
                probability: arena[id as usize].prob,
            })
            .collect())
    }

    fn is_intermediate_item(&self, arena: &[Item], id: u32) -> bool {
        match arena[id as usize].kind {
            Kind::Leaf { .. } => false,
            Kind::Unary { rule, .. } | Kind::Binary { rule, .. } => {
                self.g.is_intermediate(self.g.rules()[rule as usize].lhs)
            }
        }
    }

    fn collect(&self, arena: &[Item], id: u32, out: &mut Vec<TreeNode>) {
        if self.is_intermediate_item(arena, id) {
            match arena[id as usize].kind {
                Kind::Unary { child, .. } => self.collect(arena, child, out),
                Kind::Binary { left, right, .. } => {
                    self.collect(arena, left, out);
                    self.collect(arena, right, out);
                }
                Kind::Leaf { .. } => unreachable!(),
            }
        } else {
            out.push(self.build(arena, id));
        }
    }

    fn build(&self, arena: &[Item], id: u32) -> TreeNode {
        match arena[id as usize].kind {
            Kind::Leaf { terminal, token } => TreeNode::Leaf {
                terminal,
                token: token as usize,
            },
            Kind::Unary { rule, child } => {
                let mut children = Vec::new();
                self.collect(arena, child, &mut children);
                TreeNode::Node {
                    rule: self.origin(rule),
                    children,
                }
            }
            Kind::Binary { rule, left, right } => {
                let mut children = Vec::new();
                self.collect(arena, left, &mut children);
                self.collect(arena, right, &mut children);
                TreeNode::Node {
                    rule: self.origin(rule),
                    children,
                }
            }
        }
    }
}

fn sym_index(n_nt: usize, s: Symbol) -> usize {
    match s {
        Symbol::N(n) => n as usize,
        Symbol::T(t) => n_nt + t as usize,
    }
}

/// Ranked parses of `tokens`. Grammars that are not yet binary are
/// binarized first.
pub fn cyk_parse(tokens: &[LexedToken<'_>], grammar: &Grammar, k: usize) -> Result<Vec<ParseTree>, PcfgError> {
    if grammar.is_binary() {
        CykParser::new(grammar).parse(tokens, k)
    } else {
        let b = binarize(grammar);
        CykParser::new(&b).parse(tokens, k)
    }
}

pub fn tree_to_format(tree: &ParseTree, tokens: &[LexedToken<'_>], g: &Grammar) -> Result<FormatString, PcfgError> {
    fn walk(node: &TreeNode, tokens: &[LexedToken<'_>], g: &Grammar, fs: &mut FormatString) -> Result<(), PcfgError> {
        match node {
            TreeNode::Node { rule, children } => {
                if let Some(fc) = g.source_rules()[*rule].emit {
                    fs.push(FormatToken::Field(fc));
                    return Ok(());
                }
                for c in children {
                    walk(c, tokens, g, fs)?;
                }
                Ok(())
            }
            TreeNode::Leaf { terminal, token } => {
                let tok = &tokens[*token];
                if let Some(pattern) = g.compact_pattern(*terminal) {
                    for t in tokenize_format(pattern).expect("compact patterns are valid").tokens() {
                        fs.push(t.clone());
                    }
                } else if let Some(fc) = g.leaf_field(*terminal, tok) {
                    fs.push(FormatToken::Field(fc));
                } else if g.leaf_is_literal(*terminal) {
                    fs.push_literal(tok.text);
                } else {
                    return Err(PcfgError::UntranslatableLeaf { token: *token });
                }
                Ok(())
            }
        }
    }
    let mut fs = FormatString::new();
    walk(&tree.root, tokens, g, &mut fs)?;
    Ok(fs)
}

/// Grammar with the untrained prior for `locale`, binarized.
pub fn default_weights(locale: &Locale) -> Grammar {
    binarize(&build_datetime_grammar(locale))
}

/// Relative-frequency estimate of rule probabilities from `trees`. Rules
/// never used get [`SMOOTHING_FLOOR`]; nonterminals never expanded keep
/// their current distribution.
pub fn train(trees: &[ParseTree], g: &Grammar) -> Result<Grammar, PcfgError> {
    if trees.is_empty() {
        return Err(PcfgError::EmptyTrainingSet);
    }
    let source = g.source_rules();
    let mut counts = vec![0u64; source.len()];
    fn count(node: &TreeNode, counts: &mut [u64]) {
        if let TreeNode::Node { rule, children } = node {
            counts[*rule] += 1;
            for c in children {
                count(c, counts);
            }
        }
    }
    for t in trees {
        count(&t.root, &mut counts);
    }
    let mut totals: BTreeMap<u16, u64> = BTreeMap::new();
    for (r, c) in source.iter().zip(&counts) {
        *totals.entry(r.lhs).or_default() += c;
    }
    let probs: Vec<f64> = source
        .iter()
        .zip(&counts)
        .map(|(r, &c)| match totals[&r.lhs] {
            0 => r.probability,
            total if c > 0 => c as f64 / total as f64,
            _ => SMOOTHING_FLOOR,
        })
        .collect();
    Ok(g.with_source_probabilities(&probs))
}

/// For each labeled value, the best parse whose format matches the label.
/// Values with no such parse are skipped.
pub fn trees_for_labels(pairs: &[(String, FormatString)], g: &Grammar, k: usize) -> Vec<ParseTree> {
    let parser = CykParser::new(g);
    pairs
        .iter()
        .filter_map(|(value, label)| {
            let tokens = lex(value);
            let want = normalize_for_comparison(label);
            parser.parse(&tokens, k).ok()?.into_iter().find(|t| {
                tree_to_format(t, &tokens, g).is_ok_and(|fs| normalize_for_comparison(&fs) == want)
            })
        })
        .collect()
}

/// First-pass evidence: formats grouped by their comparison form, with
/// the mass each group received.
#[derive(Debug, Clone, PartialEq)]
pub struct FormatDistribution {
    /// (comparison key, representative format, mass), sorted by key.
    pub entries: Vec<(String, FormatString, f64)>,
    pub parsed_values: usize,
}

/// Per-field minimum width of two formats with the same comparison key.
fn narrowest(a: &FormatString, b: &FormatString) -> FormatString {
    FormatString::from_tokens(a.tokens().iter().zip(b.tokens()).map(|(x, y)| match (x, y) {
        (FormatToken::Field(fx), FormatToken::Field(fy)) if !fx.is_textual() && fy.width() < fx.width() => {
            FormatToken::Field(*fy)
        }
        _ => x.clone(),
    }))
}

pub struct NlpDetector {
    grammar: Grammar,
    k: usize,
    options: DetectOptions,
}

impl NlpDetector {
    pub fn new(locale: &Locale, options: DetectOptions) -> NlpDetector {
        NlpDetector::with_grammar(default_weights(locale), options)
    }

    pub fn with_grammar(grammar: Grammar, options: DetectOptions) -> NlpDetector {
        NlpDetector {
            grammar: binarize(&grammar),
            k: DEFAULT_K,
            options,
        }
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    /// Normalized per-value format probabilities, in tree rank order.
    pub fn value_formats(&self, value: &str) -> Result<Vec<(FormatString, f64)>, PcfgError> {
        let tokens = lex(value);
        let trees = CykParser::new(&self.grammar).parse(&tokens, self.k)?;
        let total: f64 = trees.iter().map(|t| t.probability).sum();
        let mut out = Vec::new();
        for t in &trees {
            if let Ok(fs) = tree_to_format(t, &tokens, &self.grammar) {
                out.push((fs, t.probability / total));
            }
        }
        if out.is_empty() {
            return Err(PcfgError::NoParse);
        }
        Ok(out)
    }

    pub fn distribution<S: AsRef<str> + Sync>(&self, values: &[S]) -> FormatDistribution {
        let per_value: Vec<Option<Vec<(FormatString, f64)>>> =
            values.par_iter().map(|v| self.value_formats(v.as_ref()).ok()).collect();
        let mut groups: BTreeMap<String, (FormatString, f64)> = BTreeMap::new();
        let mut parsed_values = 0;
        for formats in per_value.into_iter().flatten() {
            parsed_values += 1;
            for (fs, p) in formats {
                let key = normalize_for_comparison(&fs);
                match groups.get_mut(&key) {
                    Some((rep, mass)) => {
                        *rep = narrowest(rep, &fs);
                        *mass += p;
                    }
                    None => {
                        groups.insert(key, (fs, p));
                    }
                }
            }
        }
        let scale = if parsed_values > 0 { 1.0 / parsed_values as f64 } else { 0.0 };
        FormatDistribution {
            entries: groups.into_iter().map(|(k, (fs, m))| (k, fs, m * scale)).collect(),
            parsed_values,
        }
    }

    /// Pass 1 over the sample, pass 2 over every retained value.
    pub fn detect(&self, sample: &ColumnSample) -> Result<DetectionResult, DetectError> {
        if sample.sample.is_empty() {
            return Err(DetectError::EmptySample);
        }
        let started = Instant::now();
        let dist = self.distribution(&sample.sample);
        let analysis = started.elapsed();
        if dist.parsed_values == 0 {
            return Err(DetectError::NoParse);
        }
        let locale = self.grammar.locale();
        let started = Instant::now();
        let column = &sample.non_null_values;
        let mut ranked: Vec<Candidate> = dist
            .entries
            .par_iter()
            .map(|(_, fs, mass)| Candidate {
                format: fs.clone(),
                locale: locale.id().to_string(),
                error_rate: column_error_rate(column, fs, locale),
                score: *mass,
            })
            .collect();
        let checks = (column.len() * ranked.len()).max(1);
        let validation = started.elapsed();
        ranked.sort_by(|a, b| {
            a.error_rate
                .total_cmp(&b.error_rate)
                .then(b.score.total_cmp(&a.score))
                .then_with(|| a.format.to_string().cmp(&b.format.to_string()))
        });
        ranked.retain(|c| c.error_rate <= self.options.max_error_rate);
        if ranked.is_empty() {
            return Err(DetectError::NoDominantPattern);
        }
        Ok(DetectionResult {
            engine: Engine::Nlp,
            column: sample.column_name.clone(),
            candidates: ranked,
            timing: Timing {
                analysis_micros: analysis.as_secs_f64() * 1e6,
                validation_micros: validation.as_secs_f64() * 1e6 / checks as f64,
            },
        })
    }
}

pub fn dominant_pattern(sample: &ColumnSample, grammar: &Grammar, options: DetectOptions) -> Result<DetectionResult, DetectError> {
    NlpDetector::with_grammar(grammar.clone(), options).detect(sample)
}

pub fn detect_nlp(sample: &ColumnSample, locale: &Locale) -> Result<DetectionResult, DetectError> {
    NlpDetector::new(locale, DetectOptions::default()).detect(sample)
}
