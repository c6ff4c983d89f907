// Stores N outcomes, compresses them, and compares the codeword with N h(p).

#include <cstdio>
#include <cstdlib>

#include "demonlab/coding.hpp"
#include "demonlab/rng.hpp"

int main(int argc, char** argv) {
  using namespace demonlab;
  const std::uint64_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 10000;
  const double p = argc > 2 ? std::strtod(argv[2], nullptr) : 0.25;

  StreamRng rng(7, 0);
  coding::RecordTape tape;
  for (std::uint64_t i = 0; i < n; ++i) tape.push_back(rng.bernoulli(p));

  const coding::Codeword cw = coding::enumerative_encode(tape);
  const bool back = coding::enumerative_decode(cw) == tape;
  std::printf("N=%llu ones=%zu codeword=%zu bits  N*h(p)=%.2f  round trip %s\n",
              static_cast<unsigned long long>(n), tape.ones(), cw.length(), coding::asymptotic_k(n, p),
              back ? "ok" : "FAILED");
  return back ? 0 : 1;
}
