#include "feedtype/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace feedtype {

int ExecPolicy::resolved() const {
  if (workers > 0) return workers;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace feedtype
