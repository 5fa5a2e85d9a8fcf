#include <cstdio>

// Reads n and prints the sum of squares 1..n, with a deliberately slow
// busy loop standing in for the unoptimized hot path.
int main() {
  long long n;
  if (std::scanf("%lld", &n) != 1) return 1;
  volatile long long sink = 0;
  for (long long i = 0; i < 12000000; ++i) sink += i % 7;
  long long r = 0;
  for (long long i = 1; i <= n; ++i) r += i * i;
  std::printf("%lld\n", r);
  return 0;
}
