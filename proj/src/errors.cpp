#include "bdfnb/errors.hpp"

#include <cmath>

namespace bdfnb {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DataError(std::string("non-finite value in ") + what);
}

}  // namespace bdfnb
