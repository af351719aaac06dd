#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "scfuzz/isa/program.hpp"

namespace scfuzz::isa {

// Text form of test cases:
//
//   == PROGRAM ==
//   .seed 17
//   L0: addi x5, x6, -3
//   L1: auipc x7, %hi(D+0x1f8); ld x8, %lo(D+0x1f8)(x7)
//   L2: beq x1, x2, L4
//   == DATA_A ==
//   <384 lines of 16 hex digits>
//   == DATA_B ==
//   <384 lines of 16 hex digits>
//
// Blank lines and lines starting with '#' are ignored. Writing then parsing
// reproduces the test case exactly.

std::string format_program_instr(const ProgramInstr& pi);
// `line` is only used for error reporting.
ProgramInstr parse_program_instr(std::string_view text, std::size_t line = 0);

std::string format_program(const Program& program);

std::string write_testcase(const TestCase& tc);
TestCase parse_testcase(std::string_view text);

TestCase load_testcase(const std::filesystem::path& path);
void save_testcase(const std::filesystem::path& path, const TestCase& tc);

}  // namespace scfuzz::isa
