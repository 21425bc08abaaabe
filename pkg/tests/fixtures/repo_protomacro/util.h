#pragma once

#define SQUARE(x) ((x)*(x))
#define UTIL_VERSION 7
#define DECLARE_HANDLER(name)

int clamp01(int v);
