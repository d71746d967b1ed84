#pragma once

#include <map>
#include <string>
#include <vector>

#include "prophecy/staging/ir.hpp"

namespace prophecy::staging {

class InterpError : public StagingError {
 public:
  using StagingError::StagingError;
};

struct InterpInputs {
  std::map<std::string, std::vector<float>> buffers;  // by parameter name
  std::map<std::string, double> scalars;
};

struct InterpOutputs {
  // Final contents of every pointer parameter, plus "consumed#N" for the
  // N-th runtime::consume_tensor snapshot.
  std::map<std::string, std::vector<float>> buffers;
  std::map<std::string, double> scalars;
  std::size_t kernel_launches = 0;
  std::size_t consumed = 0;
};

enum class KernelExecution { serial, parallel };

struct InterpOptions {
  KernelExecution execution = KernelExecution::parallel;
};

// Reference interpreter. Device and unified allocations are separate host
// arrays; a kernel runs phase by phase (phases split at top-level
// runtime::grid_sync) over every (bid, tid). The parallel path spreads the
// threads of a phase over OpenMP; serial is the reference.
InterpOutputs interpret_program(const SecondStageProgram& prog, const InterpInputs& inputs,
                                const InterpOptions& options = {});

}  // namespace prophecy::staging
