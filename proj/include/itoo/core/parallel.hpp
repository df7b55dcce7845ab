#pragma once

namespace itoo {

// Every data-parallel kernel keeps a serial reference path selectable at runtime.
enum class Exec { serial, parallel };

}  // namespace itoo
