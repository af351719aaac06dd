#pragma once

#include <stdexcept>
#include <string>

namespace scfuzz {

// Root of every error raised by the library. Callers that only care about
// "something went wrong in the fuzzer" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedInstruction : public Error {
 public:
  using Error::Error;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

class FetchOutOfRange : public Error {
 public:
  using Error::Error;
};

class MisalignedAccess : public Error {
 public:
  using Error::Error;
};

class StepLimitExceeded : public Error {
 public:
  using Error::Error;
};

class ImageOverlap : public Error {
 public:
  using Error::Error;
};

class MalformedProgram : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class NonTermination : public Error {
 public:
  using Error::Error;
};

class WidthMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class NotALeak : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

}  // namespace scfuzz
