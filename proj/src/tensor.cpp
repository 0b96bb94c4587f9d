#include "tdmi/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <sstream>

namespace tdmi {

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) {
        if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "]";
    return os.str();
}

namespace {
std::atomic<bool> g_checked{false};
}

bool checked_mode() { return g_checked.load(std::memory_order_relaxed); }
void set_checked_mode(bool on) { g_checked.store(on, std::memory_order_relaxed); }

bool fault_injected(const char* key) {
    static const char* injected = std::getenv("TDMI_FAULT");
    return injected != nullptr && std::strcmp(injected, key) == 0;
}

template <typename T>
void Tape<T>::check_finite(const char* op, const std::vector<T>& v, const char* what) {
    for (const T x : v) {
        if (!std::isfinite(static_cast<double>(x)))
            throw NumericError(std::string("non-finite ") + what + " in op '" + op + "'");
    }
}

template class Tape<float>;
template class Tape<double>;

} // namespace tdmi
