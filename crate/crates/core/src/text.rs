/// Lowercases and splits on whitespace. Punctuation stays attached to its word.
pub fn tokenize(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_keeps_punctuation() {
        assert_eq!(tokenize("  A dog, RUNS.\n"), vec!["a", "dog,", "runs."]);
        assert!(tokenize("   ").is_empty());
    }
}
