//! Newsgroup-style post cleaning: header block, quoted lines and signature.

fn is_header_line(line: &str) -> bool {
    let Some((name, rest)) = line.split_once(':') else {
        return false;
    };
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        && (rest.is_empty() || rest.starts_with([' ', '\t']))
}

fn is_continuation_line(line: &str) -> bool {
    line.starts_with([' ', '\t']) && !line.trim().is_empty()
}

/// Removes a leading `Name: value` block terminated by a blank line.
fn strip_header(lines: &[&str]) -> usize {
    let Some(blank) = lines.iter().position(|l| l.trim().is_empty()) else {
        return 0;
    };
    if blank == 0 || !is_header_line(lines[0]) {
        return 0;
    }
    let all_headers = lines[1..blank]
        .iter()
        .all(|l| is_header_line(l) || is_continuation_line(l));
    if all_headers {
        blank + 1
    } else {
        0
    }
}

fn is_quote_line(line: &str) -> bool {
    line.starts_with('>') || line.starts_with('|')
}

fn is_signature_marker(line: &str) -> bool {
    line == "--" || line == "-- "
}

fn clean_once(raw: &str) -> String {
    let normalized = raw.replace("\r\n", "\n");
    let lines: Vec<&str> = normalized.split('\n').collect();
    let start = strip_header(&lines);
    let body = &lines[start..];
    let end = body
        .iter()
        .position(|l| is_signature_marker(l))
        .unwrap_or(body.len());
    let kept: Vec<&str> = body[..end]
        .iter()
        .copied()
        .filter(|l| !is_quote_line(l))
        .collect();
    kept.join("\n").trim().to_string()
}

/// Strips a leading RFC-822 style header block, quoted lines (`>` or `|`
/// prefix) and a trailing signature introduced by `--` or `-- `, then trims.
///
/// The rules are applied until nothing changes, so the function is idempotent
/// even when removing one block exposes another.
pub fn clean_newsgroup_text(raw: &str) -> String {
    let mut current = clean_once(raw);
    loop {
        let next = clean_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}
