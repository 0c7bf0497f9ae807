model.fit(X_train, y_train)
score = model.score(X_test, y_test)
if score > 0.9:
    print('good')
