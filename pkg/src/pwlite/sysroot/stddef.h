#ifndef PWLITE_STDDEF_H
#define PWLITE_STDDEF_H

#define NULL 0

typedef unsigned long size_t;
typedef long ptrdiff_t;

#endif
