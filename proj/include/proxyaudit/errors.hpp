#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace proxyaudit {

// Base for everything this library throws.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad inputs: shapes, labels, files, configs. CLI exit code 2.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Numerical failures on otherwise well-formed inputs. CLI exit code 3.
class NumericError : public Error {
public:
  using Error::Error;
};

class ZeroEvidence : public NumericError {
public:
  ZeroEvidence() : NumericError("zero evidence: posterior normalizer is 0") {}
};

class UnknownRegion : public ValidationError {
public:
  explicit UnknownRegion(const std::string& region)
      : ValidationError("unknown region key: " + region) {}
};

class LengthMismatch : public ValidationError {
public:
  LengthMismatch(std::size_t a, std::size_t b)
      : ValidationError("length mismatch: " + std::to_string(a) + " vs " +
                        std::to_string(b)) {}
};

class DimensionMismatch : public ValidationError {
public:
  explicit DimensionMismatch(const std::string& what) : ValidationError(what) {}
};

class EmptyCategory : public ValidationError {
public:
  explicit EmptyCategory(int category)
      : ValidationError("category " + std::to_string(category) +
                        " has no observations") {}
};

class EmptyTrueClass : public ValidationError {
public:
  explicit EmptyTrueClass(int category)
      : ValidationError("true class " + std::to_string(category) +
                        " has count 0") {}
};

class EmptyPredictedClass : public ValidationError {
public:
  explicit EmptyPredictedClass(int category)
      : ValidationError("predicted class " + std::to_string(category) +
                        " has count 0") {}
};

class EmptyExpectedClass : public NumericError {
public:
  explicit EmptyExpectedClass(int category)
      : NumericError("expected count (Cn)_j is not positive for class " +
                     std::to_string(category)) {}
};

class RankDeficient : public NumericError {
public:
  explicit RankDeficient(std::vector<int> columns)
      : NumericError(describe(columns)), offending_columns(std::move(columns)) {}
  std::vector<int> offending_columns;

private:
  static std::string describe(const std::vector<int>& cols) {
    std::string s = "design matrix is rank deficient; offending columns:";
    for (int c : cols) s += " " + std::to_string(c);
    return s;
  }
};

class TooFewCells : public ValidationError {
public:
  TooFewCells(int race, std::size_t got)
      : ValidationError("race " + std::to_string(race) + " has only " +
                        std::to_string(got) + " cells (need >= 3)") {}
};

class AlignmentError : public ValidationError {
public:
  explicit AlignmentError(const std::string& what) : ValidationError(what) {}
};

class InvalidConfig : public ValidationError {
public:
  explicit InvalidConfig(const std::string& field, const std::string& why)
      : ValidationError("invalid config field '" + field + "': " + why) {}
};

class ParseError : public ValidationError {
public:
  ParseError(const std::string& file, std::size_t line, const std::string& why)
      : ValidationError(file + ":" + std::to_string(line) + ": " + why) {}
};

}  // namespace proxyaudit
