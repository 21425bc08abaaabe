#include "math.h"

int add(int a, int b) { return a + b; }

int sub(int a, int b) { return a - b; }

Calculator::Calculator() : total_(0) {}

int Calculator::Apply(int x) {
  total_ += x;
  return total_;
}
