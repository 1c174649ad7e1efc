#pragma once

#include <string>
#include <vector>

namespace dplab {

enum class QuantifierSort { Number, Real };

struct Quantifier {
    bool universal = true;
    QuantifierSort sort = QuantifierSort::Number;
};

/// A quantifier prefix over an opaque quantifier-free matrix. Tokens are
/// written "∀x:ℝ ∃n:ℕ ..." (ASCII forms A/E and R/real/F vs N/nat are
/// accepted); an optional trailing "[...]" names the matrix.
struct FormulaPrefix {
    std::vector<Quantifier> tokens;
    std::string matrix;
};

/// Throws PrefixParseError (with character position) on malformed input.
FormulaPrefix parse_prefix(const std::string& text);

enum class ClassifyMode { Strict, AsWritten };

struct Classification {
    bool projective = false;  // superscript 1 when true, 0 otherwise
    int level = 0;            // 0 = quantifier-free
    bool sigma = false;       // leading block existential
    std::string label;        // "Sigma^1_2", "Pi^0_1", "QF"
};

/// Strict mode is the standard normalization: number quantifiers never
/// raise the level next to a real quantifier (projective classes are
/// closed under them), so the level is the alternation count of the real
/// subsequence, with Sigma/Pi read off its leading polarity;
/// real-quantifier-free prefixes classify in the arithmetical hierarchy.
///
/// As-written mode reproduces the source convention in which the
/// arithmetical tail after the real quantifiers is itself counted as one
/// further quantifier level: polarity runs are counted type-blind, except
/// that the maximal all-number suffix contributes exactly one run;
/// Sigma/Pi follows the first written token.
Classification classify_prefix(const FormulaPrefix& f, ClassifyMode mode);

}  // namespace dplab
