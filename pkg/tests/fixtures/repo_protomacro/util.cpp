#include "util.h"

int square_twice(int x) { return SQUARE(SQUARE(x)); }

int clamp01(int v) {
  if (v < 0) return 0;
  if (v > 1) return 1;
  return v;
}
