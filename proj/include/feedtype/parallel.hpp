#pragma once

namespace feedtype {

// Worker count for the OpenMP kernels; 0 uses the runtime default.
struct ExecPolicy {
  int workers = 0;

  int resolved() const;
};

}  // namespace feedtype
