#ifndef PWLITE_TIME_H
#define PWLITE_TIME_H

#define CLOCKS_PER_SEC 1000000

typedef long clock_t;
typedef long time_t;

clock_t clock(void);
time_t time(time_t *tloc);

#endif
