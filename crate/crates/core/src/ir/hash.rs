use sha2::{Digest, Sha256};

use super::types::{Component, Endpoint, Entity, Method};

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Removes comments and collapses every whitespace run to a single space.
///
/// String, character and text-block literals are copied verbatim, so a
/// `//` inside a URL literal is not treated as a comment.
pub fn normalize_body(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    let mut i = 0;

    let emit = |out: &mut String, pending: &mut bool, c: char| {
        if *pending && !out.is_empty() {
            out.push(' ');
        }
        *pending = false;
        out.push(c);
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            pending_space = true;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                i += 1;
            }
            i = (i + 2).min(chars.len());
            pending_space = true;
            continue;
        }
        if c.is_whitespace() {
            pending_space = true;
            i += 1;
            continue;
        }
        if c == '"' && chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') {
            for _ in 0..3 {
                emit(&mut out, &mut pending_space, '"');
            }
            i += 3;
            while i < chars.len() {
                if chars[i] == '"' && chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"')
                {
                    out.push_str("\"\"\"");
                    i += 3;
                    break;
                }
                out.push(chars[i]);
                i += 1;
            }
            continue;
        }
        if c == '"' || c == '\'' {
            emit(&mut out, &mut pending_space, c);
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                out.push(d);
                i += 1;
                if d == '\\' {
                    if let Some(&e) = chars.get(i) {
                        out.push(e);
                        i += 1;
                    }
                } else if d == c || d == '\n' {
                    break;
                }
            }
            continue;
        }
        emit(&mut out, &mut pending_space, c);
        i += 1;
    }
    out
}

/// Content hash of a method body: digest of its normalized text.
pub fn body_hash(raw_body: &str) -> String {
    sha256_hex(normalize_body(raw_body))
}

fn member_digest<T: serde::Serialize>(tag: &str, member: &T) -> String {
    let json = serde_json::to_vec(member).expect("IR members serialize");
    let mut hasher = Sha256::new();
    hasher.update(tag.as_bytes());
    hasher.update([0u8]);
    hasher.update(&json);
    hex::encode(hasher.finalize())
}

fn method_digest(m: &Method) -> String {
    let mut m = m.clone();
    m.annotations.sort();
    m.body_call_targets.sort();
    m.body_call_targets.dedup();
    m.return_object_calls.sort();
    m.return_object_calls.dedup();
    member_digest("method", &m)
}

fn endpoint_digest(e: &Endpoint) -> String {
    member_digest("endpoint", e)
}

fn entity_digest(e: &Entity) -> String {
    let mut e = e.clone();
    e.annotations.sort();
    member_digest("entity", &e)
}

/// Digest over the component's canonically ordered member digests.
///
/// Covers method signatures, bodies, annotations, resolved calls, endpoints
/// and entity fields. Identity, source path and the stored hash itself are
/// not part of the digest.
pub fn hash_component(c: &Component) -> String {
    let mut digests: Vec<String> = c
        .methods
        .iter()
        .map(method_digest)
        .chain(c.endpoints.iter().map(endpoint_digest))
        .chain(c.entity_ref.iter().map(entity_digest))
        .collect();
    digests.sort();
    sha256_hex(digests.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_strips_comments_and_whitespace() {
        let body = "{\n   // fetch\n   return  repo.find(id); /* done */\n}";
        assert_eq!(normalize_body(body), "{ return repo.find(id); }");
    }

    #[test]
    fn normalize_keeps_literals() {
        let body = r#"{ String u = "http://ts-a//x  y"; char c = '/'; }"#;
        assert_eq!(
            normalize_body(body),
            r#"{ String u = "http://ts-a//x  y"; char c = '/'; }"#
        );
    }

    #[test]
    fn empty_body_normalizes_to_empty() {
        assert_eq!(normalize_body("  \n\t "), "");
        assert_eq!(body_hash(""), body_hash(" // nothing\n"));
    }
}
