// Acceptance suite: one line per criterion, PASS or FAIL, exit 1 on any FAIL.
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

struct Criterion {
  int id;
  std::string name;
  std::function<void(std::string&)> run;  // throws or appends detail on fail
};

std::vector<Criterion>& registry() {
  static std::vector<Criterion> r;
  return r;
}

struct Register {
  Register(int id, std::string name, std::function<void(std::string&)> fn) {
    registry().push_back({id, std::move(name), std::move(fn)});
  }
};

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

[[maybe_unused]] std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

}  // namespace

#include "acceptance_criteria.inc"

int main() {
  int failures = 0;
  for (auto& c : registry()) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      c.run(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL",
                c.id, c.name.c_str(), secs, detail.empty() ? "" : " — ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
