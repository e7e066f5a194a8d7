//! Canonical minimal-cost alignment between unit sequences.
//!
//! The alignment minimizes, in order: total op cost (match 0, each of
//! substitute/delete/insert 1), then the number of indels (so a substitution
//! beats a delete+insert pair), then the step-lexicographic op sequence from
//! the left with rank delete < insert < substitute < match. The last rule
//! realizes "leftmost edit first, deletion before insertion".

use super::Edit;

/// Packed (cost, indels); componentwise sums and lexicographic comparison
/// coincide with u64 addition and ordering while both halves stay below
/// 2^32, which lengths guarantee.
#[inline]
const fn pack(cost: u32, indels: u32) -> u64 {
    ((cost as u64) << 32) | indels as u64
}

const DEL: u64 = pack(1, 1);
const INS: u64 = pack(1, 1);
const SUB: u64 = pack(1, 0);

pub(crate) fn span_edits(src: &[&str], tgt: &[&str]) -> Vec<Edit> {
    let n = src.len();
    let m = tgt.len();
    let w = m + 1;

    // best[i*w + j] = minimal (cost, indels) aligning src[i..] with tgt[j..].
    let mut best = vec![0u64; (n + 1) * w];
    for j in 0..m {
        best[n * w + j] = pack((m - j) as u32, (m - j) as u32);
    }
    for i in (0..n).rev() {
        best[i * w + m] = pack((n - i) as u32, (n - i) as u32);
        for j in (0..m).rev() {
            let mut b = DEL + best[(i + 1) * w + j];
            let ins = INS + best[i * w + j + 1];
            if ins < b {
                b = ins;
            }
            let diag = best[(i + 1) * w + j + 1];
            let d = if src[i] == tgt[j] { diag } else { SUB + diag };
            if d < b {
                b = d;
            }
            best[i * w + j] = b;
        }
    }

    // Forward walk taking the smallest-rank admissible op at every step;
    // runs of non-match ops merge into span edits as we go.
    let mut edits: Vec<Edit> = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut open: Option<(usize, Vec<String>)> = None;
    while i < n || j < m {
        let here = best[i * w + j];
        if i < n && DEL + best[(i + 1) * w + j] == here {
            open.get_or_insert_with(|| (i, Vec::new()));
            i += 1;
            continue;
        }
        if j < m && INS + best[i * w + j + 1] == here {
            let span = open.get_or_insert_with(|| (i, Vec::new()));
            span.1.push(tgt[j].to_string());
            j += 1;
            continue;
        }
        if i < n && j < m && src[i] != tgt[j] && SUB + best[(i + 1) * w + j + 1] == here {
            let span = open.get_or_insert_with(|| (i, Vec::new()));
            span.1.push(tgt[j].to_string());
            i += 1;
            j += 1;
            continue;
        }
        debug_assert!(i < n && j < m && src[i] == tgt[j] && best[(i + 1) * w + j + 1] == here);
        if let Some((start, replacement)) = open.take() {
            edits.push(Edit { start, end: i, replacement });
        }
        i += 1;
        j += 1;
    }
    if let Some((start, replacement)) = open.take() {
        edits.push(Edit { start, end: i, replacement });
    }

    // Minimality rules out no-op spans: an edit whose replacement equals the
    // units it covers could be swapped for matches at lower cost.
    debug_assert!(edits.iter().all(|e| {
        e.replacement.len() != e.end - e.start
            || e.replacement.iter().map(|s| s.as_str()).ne(src[e.start..e.end].iter().copied())
    }));
    edits
}
