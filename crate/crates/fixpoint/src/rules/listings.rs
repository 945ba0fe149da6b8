//! Source-text macros for the rule listings. Each macro returns program
//! lines; arguments are valuation, term or layout expressions spliced in
//! parentheses.

/// Field labels of the coordinate fields.
pub const COORDI_FIELDS: [(&str, i8); 4] = [("Addr", 0), ("Addr_+1", 1), ("Clock", 0), ("Clock_+1", 1)];
/// Field labels used by the computation.
pub const COMPUTE_FIELDS: [(&str, i8); 4] = [("Tape", 0), ("Head_-1", -1), ("Head_+1", 1), ("NTape", 0)];
/// Moving copies of `Tape`.
pub const SHIFT_FIELDS: [(&str, i8); 2] = [("Tape_-1", -1), ("Tape_+1", 1)];

/// The fields of the universal rule together with the coordinates.
pub fn unive_fields() -> Vec<(&'static str, i8)> {
    COORDI_FIELDS.iter().chain(&COMPUTE_FIELDS).chain(&SHIFT_FIELDS).copied().collect()
}

/// A `fields` header.
pub fn header(fields: &[(&str, i8)]) -> String {
    let parts: Vec<String> = fields
        .iter()
        .map(|(l, d)| match d {
            0 => l.to_string(),
            1 => format!("{l}:+1"),
            _ => format!("{l}:-1"),
        })
        .collect();
    format!("fields {}", parts.join(", "))
}

pub fn coordi(maddr: &str, mclock: &str) -> Vec<String> {
    vec![
        "check bina(Addr_+1) = bina(Addr) && bina(Clock_+1) = bina(Clock)".into(),
        format!("incr ({maddr}) -> Addr_+1"),
        format!("incr ({mclock}) -> Clock"),
        format!("incr ({mclock}) -> Clock_+1"),
    ]
}

pub fn compute(addr: &str, clock: &str, alarm: &str, prog: &str, rev: &str) -> Vec<String> {
    let (a, c, u) = (addr, clock, alarm);
    vec![
        format!("if ({c}) = 0 && ({a}) = 0"),
        "  write '0' -> Head_-1".into(),
        "endif".into(),
        format!("if 0 <= ({c}) && ({c}) < ({u})"),
        format!("  run {prog} on Tape, Head_-1, Head_+1"),
        format!("elsif ({c}) = ({u})"),
        format!("  check !instates(Head_-1, {prog}) && !instates(Head_+1, {prog})"),
        "  write Tape -> NTape".into(),
        "  exch Head_-1, Head_+1".into(),
        format!("elsif ({u}) < ({c}) && ({c}) <= 2 * ({u})"),
        format!("  unrun {prog} on Tape, Head_+1, Head_-1"),
        "endif".into(),
        format!("if 2 * ({u}) <= ({c}) && ({c}) < 3 * ({u})"),
        format!("  run {rev} on NTape, Head_-1, Head_+1"),
        format!("elsif ({c}) = 3 * ({u})"),
        format!("  check !instates(Head_-1, {rev}) && !instates(Head_+1, {rev})"),
        "  unwrite Tape -> NTape".into(),
        "  exch Head_-1, Head_+1".into(),
        format!("elsif 3 * ({u}) < ({c}) && ({c}) <= 4 * ({u})"),
        format!("  unrun {rev} on Tape, Head_+1, Head_-1"),
        "endif".into(),
        format!("if ({c}) = 4 * ({u}) && ({a}) = 0"),
        "  unwrite '0' -> Head_-1".into(),
        "endif".into(),
    ]
}

/// `nu[i]` is the direction of simulated field `i`; `k` a layout expression.
pub fn shift(nu: &[i8], k: &str, addr: &str, clock: &str, maddr: &str) -> Vec<String> {
    let mut out = vec![format!("if ({clock}) = 0 || ({clock}) = ({maddr})")];
    for (i, &d) in nu.iter().enumerate() {
        if d == 0 {
            continue;
        }
        let target = if d > 0 { "Tape_+1" } else { "Tape_-1" };
        out.push(format!("  if off({k}, {i}) <= ({addr}) && ({addr}) < off({k}, {})", i + 1));
        out.push(format!("    exch Tape, {target}"));
        out.push("  endif".into());
    }
    out.push("endif".into());
    out
}

#[allow(clippy::too_many_arguments)]
pub fn unive(
    nu: &[i8],
    k: &str,
    addr: &str,
    clock: &str,
    maddr: &str,
    alarm: &str,
    prog: &str,
    rev: &str,
) -> Vec<String> {
    let mut out = compute(addr, clock, alarm, prog, rev);
    out.extend(shift(nu, k, addr, &format!("({clock}) - 4 * ({alarm})"), maddr));
    out
}

pub fn chekka(m: usize, addr: &str, tape: &str, k: &str) -> Vec<String> {
    let mut out = vec![format!("if ({addr}) >= off({k}, {m})"), format!("  check {tape} = '3'"), "endif".into()];
    for i in 0..m {
        out.push(format!("if ({addr}) = off({k}, {i})"));
        out.push(format!("  check {tape} = '2'"));
        out.push(format!("elsif off({k}, {i}) < ({addr}) && ({addr}) < off({k}, {})", i + 1));
        out.push(format!("  check {tape} = '0' || {tape} = '1'"));
        out.push("endif".into());
    }
    out
}

pub fn hier(addr: &str, tape: &str, k: &str, i: usize, t: &str) -> Vec<String> {
    vec![
        format!("if off({k}, {i}) <= ({addr}) && ({addr}) < off({k}, {i}) + len(chi({t}))"),
        format!("  check {tape} = at(chi({t}), ({addr}) - off({k}, {i}))"),
        "endif".into(),
    ]
}

/// The emptiness check on the auxiliary fields.
pub fn empty_aux() -> String {
    "check emp(''; Head_-1, Head_+1, Tape_-1, Tape_+1, NTape)".into()
}

/// Indents every line by one level.
pub fn indent(lines: Vec<String>) -> Vec<String> {
    lines.into_iter().map(|l| format!("  {l}")).collect()
}
