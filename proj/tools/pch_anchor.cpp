#include <wqed/dynamics.hpp>
