#ifndef PWLITE_STDLIB_H
#define PWLITE_STDLIB_H

#include <stddef.h>

#define RAND_MAX 2147483647
#define EXIT_SUCCESS 0
#define EXIT_FAILURE 1

void *malloc(size_t size);
void *calloc(size_t nmemb, size_t size);
void *realloc(void *ptr, size_t size);
void free(void *ptr);
void exit(int status);
void abort(void);
int atoi(const char *nptr);
long atol(const char *nptr);
double atof(const char *nptr);
long strtol(const char *nptr, char **endptr, int base);
double strtod(const char *nptr, char **endptr);
int rand(void);
void srand(unsigned int seed);
int abs(int j);
long labs(long j);
void qsort(void *base, size_t nmemb, size_t size, void *compar);
char *getenv(const char *name);

#endif
