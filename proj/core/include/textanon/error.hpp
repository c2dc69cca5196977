#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace textanon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input line that does not have the expected column layout.
class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& detail, const std::string& file = {})
      : Error((file.empty() ? "line " : file + ":") + std::to_string(line_no) + ": " + detail),
        line_no_(line_no),
        detail_(detail) {}
  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_no_;
  std::string detail_;
};

/// A tag column that is not O, B-X or I-X.
class UnknownTag : public Error {
 public:
  UnknownTag(std::size_t line_no, const std::string& tag, const std::string& file = {})
      : Error((file.empty() ? "line " : file + ":") + std::to_string(line_no) +
              ": unknown tag '" + tag + "'"),
        line_no_(line_no),
        tag_(tag) {}
  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::size_t line_no_;
  std::string tag_;
};

class InvalidScheme : public Error {
 public:
  using Error::Error;
};

class OverlappingSpans : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class RatioError : public Error {
 public:
  using Error::Error;
};

class NoTrainingData : public Error {
 public:
  using Error::Error;
};

class UnknownLabel : public Error {
 public:
  using Error::Error;
};

class InvalidPattern : public Error {
 public:
  using Error::Error;
};

class NotDigits : public Error {
 public:
  using Error::Error;
};

class NoDictionaryForLabel : public Error {
 public:
  using Error::Error;
};

/// Gold and predicted sentence lists have different sizes.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// An imported prediction file disagrees with the test corpus.
class ImportMisalignment : public Error {
 public:
  ImportMisalignment(std::size_t sentence_index, const std::string& what)
      : Error("sentence " + std::to_string(sentence_index) + ": " + what),
        sentence_index_(sentence_index) {}
  std::size_t sentence_index() const noexcept { return sentence_index_; }

 private:
  std::size_t sentence_index_;
};

/// Unreadable or inconsistent model / registry / dictionary files.
class LoadError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace textanon
