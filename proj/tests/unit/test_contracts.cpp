#include <doctest.h>

#include "scfuzz/common/error.hpp"
#include "scfuzz/contracts/contract.hpp"
#include "test_helpers.hpp"

using namespace scfuzz;
using namespace scfuzz::contracts;
using isa::DataSection;
using isa::TestCase;

namespace {

isa::StepRecord step_of(const char* text, std::uint64_t pc, std::uint64_t rs1, std::uint64_t rs2,
                        std::uint64_t rd_after) {
  isa::StepRecord s;
  s.pc = pc;
  s.instr = isa::parse_program_instr(text).instr;
  s.rs1_value = rs1;
  s.rs2_value = rs2;
  s.rd_value = rd_after;
  return s;
}

}  // namespace

TEST_CASE("seq-ct load rule") {
  const auto obs = observe(ContractId::SeqCt, step_of("ld x1, 0(x2)", 0x8000'0040, 0x8000'4000, 0, 99));
  ObservationSet want;
  want.add(Label::LAddr, 0x8000'4000);
  want.add(Label::Pc, 0x8000'0040);
  CHECK(obs == want);
  CHECK(format_observation_set(obs) == "{lAddr=0x80004000, pc=0x80000040}");
}

TEST_CASE("seq-ct store and other rules") {
  const auto st = observe(ContractId::SeqCt, step_of("sd x3, -8(x2)", 0x100, 0x2008, 5, 0));
  CHECK(st.has(Label::SAddr));
  CHECK(st.get(Label::SAddr) == 0x2000);
  CHECK(st.size() == 2);
  const auto alu = observe(ContractId::SeqCt, step_of("add x1, x2, x3", 0x104, 1, 2, 3));
  CHECK(alu.size() == 1);
  CHECK(alu.get(Label::Pc) == 0x104);
  const auto br = observe(ContractId::SeqCt, step_of("beq x1, x2, 8", 0x108, 1, 1, 0));
  CHECK(br.size() == 1);
}

TEST_CASE("seq-ct-b adds branch outcome to the pc observation") {
  const auto taken = observe(ContractId::SeqCtB, step_of("beq x1, x2, 8", 0x108, 7, 7, 0));
  ObservationSet want = observe(ContractId::SeqCt, step_of("beq x1, x2, 8", 0x108, 7, 7, 0));
  want.add(Label::Taken, 1);
  CHECK(taken == want);
  for (const char* b : {"bne x1, x2, 8", "blt x1, x2, 8", "bge x1, x2, 8", "bltu x1, x2, 8", "bgeu x1, x2, 8"}) {
    CHECK(observe(ContractId::SeqCtB, step_of(b, 0, 1, 2, 0)).has(Label::Taken));
  }
  const auto not_taken = observe(ContractId::SeqCtB, step_of("bltu x1, x2, 8", 0x108, 9, 7, 0));
  CHECK(not_taken.get(Label::Taken) == 0);
  CHECK_FALSE(observe(ContractId::SeqCtB, step_of("jal x1, 8", 0, 0, 0, 0)).has(Label::Taken));
}

TEST_CASE("seq-arch adds load values only") {
  const auto ld = observe(ContractId::SeqArch, step_of("ld x1, 0(x2)", 0x40, 0x4000, 0, 7));
  ObservationSet want = observe(ContractId::SeqCt, step_of("ld x1, 0(x2)", 0x40, 0x4000, 0, 7));
  want.add(Label::LValue, 7);
  CHECK(ld == want);
  CHECK(format_observation_set(ld) == "{lAddr=0x4000, lValue=0x7, pc=0x40}");
  const auto st = observe(ContractId::SeqArch, step_of("sd x3, 0(x2)", 0x40, 0x4000, 7, 0));
  CHECK_FALSE(st.has(Label::LValue));
}

TEST_CASE("state-based observe agrees with step records") {
  const auto prog = testing::make_program({"ld x5, 0(x31)", "beq x5, x6, L2", "sd x5, 8(x31)"});
  DataSection d;
  d.words[30] = 0x8000'4000 + 0x200;
  d.words[0x200 / 8] = 42;
  const auto img = isa::build_image(prog, d);
  isa::ArchState s = img.initial;
  for (std::size_t i = 0; i < isa::kPrologueInstrs + 3; ++i) {
    const isa::ArchState pre = s;
    const auto rec = isa::arch_step(s, img);
    for (auto c : {ContractId::SeqCt, ContractId::SeqCtB, ContractId::SeqArch}) {
      CHECK(observe(c, pre, rec.instr, s) == observe(c, rec));
    }
  }
}

TEST_CASE("ALU-only body under seq-ct yields increasing pc singletons") {
  std::vector<std::string> words;
  for (int i = 0; i < 8; ++i) words.push_back("xor x" + std::to_string(i + 3) + ", x1, x2");
  const auto trace = contract_trace(ContractId::SeqCt, testing::make_program(words), DataSection{});
  CHECK(trace.size() == isa::kPrologueInstrs + 8 + isa::kEpilogueInstrs);
  for (std::size_t i = isa::kPrologueInstrs; i < isa::kPrologueInstrs + 8; ++i) {
    CHECK(trace[i].size() == 1);
    CHECK(trace[i].get(Label::Pc) == trace[i - 1].get(Label::Pc) + 4);
  }
  CHECK(trace == contract_trace(ContractId::SeqCt, testing::make_program(words), DataSection{}));
}

TEST_CASE("distinguishability") {
  TestCase tc;
  tc.program = testing::make_program({"ld x5, 0(x1)"});
  tc.data_a.words[0] = 0x8000'4000;
  tc.data_b = tc.data_a;
  CHECK(distinguishable(ContractId::SeqCt, tc) == ContractVerdict::ContractIndistinguishable);
  tc.data_b.words[0] = 0x8000'4008;
  CHECK(distinguishable(ContractId::SeqCt, tc) == ContractVerdict::ContractDistinguishable);

  // Values loaded from equal addresses differ: only seq-arch sees it.
  tc.data_b.words[0] = 0x8000'4000;
  tc.program = testing::make_program({"ld x5, 0(x1)", "ld x6, 0x100(x1)"});
  tc.data_a.words[0x100 / 8] = 1;
  tc.data_b.words[0x100 / 8] = 2;
  CHECK(distinguishable(ContractId::SeqCt, tc) == ContractVerdict::ContractIndistinguishable);
  CHECK(distinguishable(ContractId::SeqCtB, tc) == ContractVerdict::ContractIndistinguishable);
  CHECK(distinguishable(ContractId::SeqArch, tc) == ContractVerdict::ContractDistinguishable);

  // Never-loaded words may differ under seq-arch.
  tc.data_b.words[0x100 / 8] = 1;
  tc.data_b.words[200] = 0xffff;
  CHECK(distinguishable(ContractId::SeqArch, tc) == ContractVerdict::ContractIndistinguishable);

  // Branch outcome differs: seq-ct-b sees it, and the pc sequence diverges too.
  TestCase br;
  br.program = testing::make_program({"bltu x1, x2, L2", "addi x5, x0, 1"});
  br.data_a.words[0] = 1;
  br.data_a.words[1] = 2;
  br.data_b = br.data_a;
  br.data_b.words[0] = 3;
  CHECK(distinguishable(ContractId::SeqCtB, br) == ContractVerdict::ContractDistinguishable);
  CHECK(distinguishable(ContractId::SeqCt, br) == ContractVerdict::ContractDistinguishable);
}

TEST_CASE("trace dump is canonical") {
  const auto prog = testing::make_program({"ld x5, 0(x31)", "sd x5, 8(x31)"});
  DataSection d;
  d.words[30] = 0x8000'4000 + 0x200;
  const auto dump = format_trace(contract_trace(ContractId::SeqArch, prog, d));
  CHECK(dump.rfind("step 0: {pc=0x80000000}\n", 0) == 0);
  CHECK(dump.find("step 33: {lAddr=0x80004200, lValue=0x0, pc=0x80000084}\n") != std::string::npos);
  CHECK(dump.find("step 34: {pc=0x80000088, sAddr=0x80004208}\n") != std::string::npos);
}

TEST_CASE("contract names") {
  CHECK(contract_from_name("seq-ct-b") == ContractId::SeqCtB);
  CHECK(contract_from_name("seq-arch") == ContractId::SeqArch);
  CHECK_FALSE(contract_from_name("spec-ct").has_value());
}
