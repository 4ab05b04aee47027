/// Placeholder every path variable is collapsed to.
pub const PATH_VARIABLE: &str = "{*}";

/// Normalizes an HTTP path template.
///
/// The query string is dropped, empty segments are removed, and any segment
/// containing a `{...}` variable becomes `{*}`. The result always starts
/// with `/` and never ends with one unless it is the root.
pub fn normalize_path(raw: &str) -> String {
    let raw = raw.split(['?', '#']).next().unwrap_or("");
    let mut segments: Vec<&str> = Vec::new();
    for seg in split_segments(raw) {
        let seg = seg.trim();
        if seg.is_empty() {
            continue;
        }
        if seg.contains('{') || seg.contains('}') {
            segments.push(PATH_VARIABLE);
        } else {
            segments.push(seg);
        }
    }
    if segments.is_empty() {
        return "/".to_string();
    }
    let mut out = String::new();
    for seg in segments {
        out.push('/');
        out.push_str(seg);
    }
    out
}

/// Splits on `/` outside of `{...}`, so regex variables like `{id:[0-9/]+}` stay whole.
fn split_segments(raw: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in raw.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            '/' if depth == 0 => {
                out.push(&raw[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&raw[start..]);
    out
}

/// Joins a class-level base path with a method-level path, then normalizes.
pub fn join_paths(base: &str, sub: &str) -> String {
    normalize_path(&format!("{base}/{sub}"))
}

pub fn is_normalized(path: &str) -> bool {
    normalize_path(path) == path
}
